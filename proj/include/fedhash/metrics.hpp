#pragma once

// Metrics CSV, columns fixed and versioned: round,bytes,acc,loss,secs.
// Formatting is deterministic so identical runs produce identical files.

#include <string>
#include <vector>

#include "fedhash/federated.hpp"

namespace fedhash {

inline constexpr const char* kMetricsHeader = "round,bytes,acc,loss,secs";

std::string format_metrics_csv(const std::vector<MetricsRecord>& metrics);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& metrics);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace fedhash
