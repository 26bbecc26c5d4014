#include "kwb/report.hpp"

namespace kwb {

Json to_json(const ConfidenceReport& r) {
    return Json{{"uniform", r.uniform_value}, {"rb", r.rb_value}, {"level", r.level},
                {"mu_r", r.mu_r},             {"mu_b", r.mu_b},   {"epsilon", r.epsilon}};
}

Json to_json(const IlluminantEstimate& e) {
    Json j;
    j["mode"] = std::string(to_string(e.mode));
    Json regions = Json::array();
    for (const auto& r : e.regions) {
        regions.push_back({{"label", r.label},
                           {"gains", {r.gains.r(), r.gains.g(), r.gains.b()}},
                           {"illuminant", {r.illuminant.r(), r.illuminant.g(), r.illuminant.b()}},
                           {"pixels", r.pixels}});
    }
    j["regions"] = regions;
    j["confidence"] = e.confidence ? to_json(*e.confidence) : Json(nullptr);
    return j;
}

Json to_json(const ErrorStats& s) {
    return Json{{"mean", s.mean},       {"median", s.median},   {"trimean", s.trimean},
                {"best25", s.best25},   {"worst25", s.worst25}, {"gm", s.gm}};
}

Json to_json(const EvalReport& r) {
    Json j;
    Json folds = Json::array();
    for (const auto& f : r.per_fold) folds.push_back(f ? to_json(*f) : Json(nullptr));
    j["per_fold"] = folds;
    j["pooled"] = to_json(r.pooled);
    j["failures"] = r.failures.size();
    Json rows = Json::array();
    for (const auto& f : r.failures) rows.push_back({{"name", f.name}, {"error", f.message}});
    j["failure_rows"] = rows;
    j["regions_scored"] = r.errors.size();
    return j;
}

}  // namespace kwb
