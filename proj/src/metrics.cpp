#include "maptrace/metrics.hpp"

#include <cstdio>

namespace maptrace {

void accumulate(ConfusionMatrix& cm, std::span<const int8_t> pred,
                std::span<const int8_t> gt) {
    require(pred.size() == gt.size(), "confusion: shape mismatch");
    const int C = cm.num_classes;
    for (size_t i = 0; i < gt.size(); ++i) {
        const int8_t y = gt[i];
        if (y == kIgnoreLabel) {
            ++cm.ignored;
            continue;
        }
        const int8_t p = pred[i];
        require(y >= 0 && y < C, "confusion: ground-truth label out of range");
        require(p >= 0 && p < C, "confusion: predicted label out of range");
        ++cm.at(y, p);
    }
}

void accumulate(ConfusionMatrix& cm, const LabelRaster& pred, const LabelRaster& gt) {
    require(pred.height == gt.height && pred.width == gt.width,
            "confusion: raster shape mismatch");
    accumulate(cm, std::span<const int8_t>(pred.labels), std::span<const int8_t>(gt.labels));
}

std::optional<double> class_iou(const ConfusionMatrix& cm, int c) {
    require(c >= 0 && c < cm.num_classes, "iou: invalid class id");
    const uint64_t tp = cm.at(c, c);
    uint64_t fp = 0, fn = 0;
    for (int k = 0; k < cm.num_classes; ++k) {
        if (k == c) continue;
        fp += cm.at(k, c);
        fn += cm.at(c, k);
    }
    const uint64_t uni = tp + fp + fn;
    if (uni == 0) return std::nullopt;
    return (double)tp / (double)uni;
}

double overall_accuracy(const ConfusionMatrix& cm) {
    const uint64_t total = cm.total();
    require(total > 0, "overall accuracy: empty confusion matrix");
    uint64_t correct = 0;
    for (int c = 0; c < cm.num_classes; ++c) correct += cm.at(c, c);
    return (double)correct / (double)total;
}

MetricReport make_report(const ConfusionMatrix& cm, const std::set<int>& excluded) {
    MetricReport r;
    r.excluded = excluded;
    r.iou.resize(cm.num_classes);
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < cm.num_classes; ++c) {
        r.iou[c] = class_iou(cm, c);
        if (r.iou[c] && !excluded.count(c)) {
            sum += *r.iou[c];
            ++n;
        }
    }
    r.miou = n > 0 ? sum / n : 0.0;
    r.oa = overall_accuracy(cm);
    return r;
}

namespace {

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
    return buf;
}

}  // namespace

std::string report_csv_header(const ClassScheme& scheme) {
    std::string out = "model,year";
    for (const auto& name : scheme.names)
        if (name != "UK") out += "," + name;
    out += ",mIoU,OA";
    return out;
}

std::string report_csv_row(const std::string& model, int year, const MetricReport& report,
                           const ClassScheme& scheme) {
    std::string out = model + "," + std::to_string(year);
    for (int c = 0; c < scheme.count(); ++c) {
        if (scheme.names[c] == "UK") continue;
        out += ",";
        out += report.iou[c] ? fmt_pct(*report.iou[c]) : std::string("-");
    }
    out += "," + fmt_pct(report.miou) + "," + fmt_pct(report.oa);
    return out;
}

}  // namespace maptrace
