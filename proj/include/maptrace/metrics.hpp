#pragma once

// Confusion-matrix based evaluation: per-class IoU, mean IoU and overall
// accuracy. Classes that never occur (neither predicted nor present) report
// no IoU at all rather than zero, so means match the "-" convention used
// when a class is absent from a given year.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "maptrace/common.hpp"
#include "maptrace/raster.hpp"

namespace maptrace {

struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<uint64_t> counts;  // row = ground truth, col = prediction
    uint64_t ignored = 0;          // pixels skipped because gt carried the ignore marker

    explicit ConfusionMatrix(int c = 6) : num_classes(c), counts((size_t)c * c, 0) {}

    uint64_t& at(int gt, int pred) { return counts[(size_t)gt * num_classes + pred]; }
    uint64_t at(int gt, int pred) const { return counts[(size_t)gt * num_classes + pred]; }

    uint64_t total() const {
        uint64_t t = 0;
        for (uint64_t v : counts) t += v;
        return t;
    }

    void merge(const ConfusionMatrix& other) {
        require(other.num_classes == num_classes, "confusion: class count mismatch");
        for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
        ignored += other.ignored;
    }
};

// Tallies pred against gt; gt pixels with the ignore marker are skipped and
// counted in `ignored`. Associative across tiles.
void accumulate(ConfusionMatrix& cm, std::span<const int8_t> pred,
                std::span<const int8_t> gt);
void accumulate(ConfusionMatrix& cm, const LabelRaster& pred, const LabelRaster& gt);

// TP / (TP + FP + FN); absent when the class neither occurs nor is predicted.
std::optional<double> class_iou(const ConfusionMatrix& cm, int c);

double overall_accuracy(const ConfusionMatrix& cm);

struct MetricReport {
    std::vector<std::optional<double>> iou;  // per class, absent when undefined
    double miou = 0.0;                       // over present, non-excluded classes
    double oa = 0.0;
    std::set<int> excluded;
};

MetricReport make_report(const ConfusionMatrix& cm, const std::set<int>& excluded = {});

// One table row in the layout (model, year, WL, GL, SM, FW, SW, mIoU, OA);
// values are x100 rounded to one decimal, absent IoUs render as "-".
std::string report_csv_header(const ClassScheme& scheme);
std::string report_csv_row(const std::string& model, int year, const MetricReport& report,
                           const ClassScheme& scheme);

}  // namespace maptrace
