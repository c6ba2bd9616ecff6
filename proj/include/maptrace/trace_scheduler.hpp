#pragma once

// The age-tracing curriculum over one patch's year sequence. Starting from
// the anchor index, each step adds the nearest not-yet-active map per active
// direction until the sequence ends are reached. The cumulative active set
// at step n is {i-n .. i+n} clamped to bounds (bi mode) or its one-sided
// variant.

#include <map>
#include <set>
#include <vector>

#include "maptrace/raster.hpp"

namespace maptrace {

enum class TraceMode { bi, mono_past, mono_future };

const char* trace_mode_name(TraceMode mode);
TraceMode trace_mode_from_name(const std::string& name);

struct LabelSource {
    bool ground_truth = false;
    // For pseudo-labels: the tracing step whose checkpoint produced them
    // (index added at step n => produced by the model of step n-1).
    int produced_by_step = -1;
};

struct TraceState {
    int anchor_index = 0;
    int step = 0;
    TraceMode mode = TraceMode::bi;
    std::vector<int> years;  // ordered year sequence of the patch
    std::set<int> active;    // active sequence indices (cumulative)
    std::map<int, LabelSource> label_sources;
};

// Nearest map index to the labeled year; ties break toward the earlier year.
int select_anchor(const std::vector<int>& years, int anchor_label_year);
int select_anchor(const Manifest& manifest, const std::string& patch);

TraceState make_trace_state(std::vector<int> years, int anchor_index, TraceMode mode);

struct StepResult {
    std::vector<int> new_indices;  // empty iff exhausted
    bool exhausted = false;
};

// Advances one tracing step: bi mode adds {i-(n+1), i+(n+1)} within bounds,
// the mono modes their single direction. Exhaustion is a normal return and
// leaves the state unchanged.
StepResult next_step(TraceState& state);

// All active indices in ascending order (the cumulative training set).
std::vector<int> training_indices(const TraceState& state);

}  // namespace maptrace
