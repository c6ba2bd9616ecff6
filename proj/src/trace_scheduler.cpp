#include "maptrace/trace_scheduler.hpp"

#include <cstdlib>

namespace maptrace {

const char* trace_mode_name(TraceMode mode) {
    switch (mode) {
        case TraceMode::bi: return "bi";
        case TraceMode::mono_past: return "mono_past";
        case TraceMode::mono_future: return "mono_future";
    }
    return "?";
}

TraceMode trace_mode_from_name(const std::string& name) {
    if (name == "bi") return TraceMode::bi;
    if (name == "mono_past" || name == "mono") return TraceMode::mono_past;
    if (name == "mono_future") return TraceMode::mono_future;
    fail("unknown trace mode: " + name);
}

int select_anchor(const std::vector<int>& years, int anchor_label_year) {
    require(!years.empty(), "select_anchor: empty sequence");
    int best = 0;
    int best_dist = std::abs(anchor_label_year - years[0]);
    for (int i = 1; i < (int)years.size(); ++i) {
        const int d = std::abs(anchor_label_year - years[i]);
        if (d < best_dist) {  // strict: ties keep the earlier year
            best_dist = d;
            best = i;
        }
    }
    return best;
}

int select_anchor(const Manifest& manifest, const std::string& patch) {
    std::vector<int> years;
    for (int idx : manifest.entry_indices(patch)) years.push_back(manifest.entries[idx].year);
    return select_anchor(years, manifest.anchor_year(patch));
}

TraceState make_trace_state(std::vector<int> years, int anchor_index, TraceMode mode) {
    require(!years.empty(), "trace state: empty sequence");
    require(anchor_index >= 0 && anchor_index < (int)years.size(),
            "trace state: anchor index out of range");
    TraceState s;
    s.anchor_index = anchor_index;
    s.step = 0;
    s.mode = mode;
    s.years = std::move(years);
    s.active.insert(anchor_index);
    s.label_sources[anchor_index] = LabelSource{true, -1};
    return s;
}

StepResult next_step(TraceState& state) {
    const int n1 = state.step + 1;
    const int N = (int)state.years.size();
    StepResult result;
    if (state.mode == TraceMode::bi || state.mode == TraceMode::mono_past) {
        const int idx = state.anchor_index - n1;
        if (idx >= 0) result.new_indices.push_back(idx);
    }
    if (state.mode == TraceMode::bi || state.mode == TraceMode::mono_future) {
        const int idx = state.anchor_index + n1;
        if (idx < N) result.new_indices.push_back(idx);
    }
    if (result.new_indices.empty()) {
        result.exhausted = true;
        return result;
    }
    state.step = n1;
    for (int idx : result.new_indices) {
        state.active.insert(idx);
        state.label_sources[idx] = LabelSource{false, n1 - 1};
    }
    return result;
}

std::vector<int> training_indices(const TraceState& state) {
    return std::vector<int>(state.active.begin(), state.active.end());
}

}  // namespace maptrace
