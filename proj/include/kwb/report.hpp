#pragma once

#include <nlohmann/json.hpp>

#include "kwb/clustering.hpp"
#include "kwb/confidence.hpp"
#include "kwb/eval.hpp"

namespace kwb {

using Json = nlohmann::ordered_json;

Json to_json(const ConfidenceReport& report);
// {mode, regions: [{label, gains, illuminant, pixels}], confidence}
Json to_json(const IlluminantEstimate& estimate);
Json to_json(const ErrorStats& stats);
// {per_fold: [...], pooled: {...}, failures: n, failure_rows: [...], regions_scored: n}
Json to_json(const EvalReport& report);

}  // namespace kwb
