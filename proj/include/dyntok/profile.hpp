#pragma once

#include <string>
#include <vector>

#include "dyntok/errors.hpp"

namespace dyntok {

enum class ScheduleKind { constant, linear, reverse_linear };

std::string schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& name);

// Per-layer merge budget family. All kinds spend the same total budget
// layers * r_bar; linear front-loads it, reverse_linear back-loads it.
struct MergeSchedule {
    ScheduleKind kind = ScheduleKind::constant;
    int r_bar = 0;
};

// Integer per-layer targets r_i with sum == layers * r_bar.
std::vector<int> schedule_targets(const MergeSchedule& s, int layers);

// k-th largest of the pooled scores: k == 0 gives +inf (merge nothing),
// k >= |scores| gives -inf (merge everything the selector sees).
double calibrate_layer(const std::vector<double>& scores, std::size_t k);

struct ThresholdProfile {
    std::vector<double> taus;   // one per layer, +-inf allowed
    MergeSchedule schedule;
    int batch_size = 0;
    int num_batches = 0;
    std::string corpus_id;
    std::string similarity = "cosine-headmean";
};

void save_profile(const ThresholdProfile& p, const std::string& path);
ThresholdProfile load_profile(const std::string& path);

std::string profile_to_json_text(const ThresholdProfile& p);
ThresholdProfile profile_from_json_text(const std::string& text);

} // namespace dyntok
