#pragma once

#include <map>
#include <string>
#include <vector>

namespace guided {

/// Scoring rule for the 7-point melanoma checklist: per criterion, a map
/// from predicted class label to its point contribution, plus the decision
/// thresholds in force.
struct CriteriaScoreTable {
    std::vector<std::string> criteria; // required set, canonical order
    std::map<std::string, std::map<std::string, int>> points;
    std::vector<int> thresholds = {1, 3};

    /// Contributions >= 0, thresholds strictly increasing, every listed
    /// criterion present in the points map (ConfigError otherwise).
    void validate() const;
};

/// Checklist convention: major criteria (atypical pigment network, blue-
/// whitish veil, irregular vascular structures) score 2; minor criteria
/// (irregular pigmentation, irregular streaks, irregular dots and globules,
/// regression structures) score 1.
CriteriaScoreTable default_seven_point_table();

struct SevenPointResult {
    int score = 0;
    bool positive = false;
};

/// Sums the per-criterion contributions of the predicted labels and decides
/// melanoma when score >= t. Missing criterion or unknown label -> InputError.
SevenPointResult seven_point_infer(const std::map<std::string, std::string>& criteria_preds,
                                   const CriteriaScoreTable& table, int threshold);

} // namespace guided
