#include "fedhash/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedhash/errors.hpp"

namespace fedhash {

std::string format_metrics_csv(const std::vector<MetricsRecord>& metrics) {
    std::string out = kMetricsHeader;
    out += '\n';
    char line[160];
    for (const auto& rec : metrics) {
        std::snprintf(line, sizeof(line), "%" PRIu64 ",%" PRIu64 ",%.9g,%.9g,%.3f\n", rec.round,
                      rec.cumulative_uploaded_bytes, rec.accuracy, rec.mean_train_loss,
                      rec.seconds);
        out += line;
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& metrics) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << format_metrics_csv(metrics);
    if (!out) throw Error("short write to '" + path + "'");
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw Error("'" + path + "' does not start with the expected metrics header");
    }
    std::vector<MetricsRecord> metrics;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRecord rec;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        rec.round = std::stoull(cell);
        std::getline(row, cell, ',');
        rec.cumulative_uploaded_bytes = std::stoull(cell);
        std::getline(row, cell, ',');
        rec.accuracy = std::stod(cell);
        std::getline(row, cell, ',');
        rec.mean_train_loss = std::stod(cell);
        std::getline(row, cell, ',');
        rec.seconds = std::stod(cell);
        metrics.push_back(rec);
    }
    return metrics;
}

}  // namespace fedhash
