#include "guided/seven_point.hpp"

#include "guided/errors.hpp"

namespace guided {

void CriteriaScoreTable::validate() const {
    if (criteria.empty()) throw ConfigError("score table lists no criteria");
    for (const auto& name : criteria) {
        auto it = points.find(name);
        if (it == points.end())
            throw ConfigError("criterion " + name + " has no score entries");
        for (const auto& [label, pts] : it->second)
            if (pts < 0)
                throw ConfigError("criterion " + name + " label " + label +
                                  " has a negative contribution");
    }
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] <= thresholds[i - 1])
            throw ConfigError("thresholds must be strictly increasing");
}

CriteriaScoreTable default_seven_point_table() {
    CriteriaScoreTable t;
    t.criteria = {"PN", "BWV", "VS", "PIG", "STR", "DaG", "RS"};
    t.points["PN"] = {{"absent", 0}, {"typical", 0}, {"atypical", 2}};
    t.points["BWV"] = {{"absent", 0}, {"present", 2}};
    t.points["VS"] = {{"absent", 0}, {"regular", 0}, {"irregular", 2}};
    t.points["PIG"] = {{"absent", 0}, {"regular", 0}, {"irregular", 1}};
    t.points["STR"] = {{"absent", 0}, {"regular", 0}, {"irregular", 1}};
    t.points["DaG"] = {{"absent", 0}, {"regular", 0}, {"irregular", 1}};
    t.points["RS"] = {{"absent", 0}, {"present", 1}};
    t.thresholds = {1, 3};
    t.validate();
    return t;
}

SevenPointResult seven_point_infer(const std::map<std::string, std::string>& criteria_preds,
                                   const CriteriaScoreTable& table, int threshold) {
    table.validate();
    SevenPointResult result;
    for (const auto& name : table.criteria) {
        auto pred = criteria_preds.find(name);
        if (pred == criteria_preds.end())
            throw InputError("no prediction for criterion " + name);
        const auto& labels = table.points.at(name);
        auto entry = labels.find(pred->second);
        if (entry == labels.end())
            throw InputError("criterion " + name + " has no label '" + pred->second + "'");
        result.score += entry->second;
    }
    result.positive = result.score >= threshold;
    return result;
}

} // namespace guided
