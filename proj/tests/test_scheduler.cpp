#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "maptrace/trace_scheduler.hpp"

using namespace maptrace;

namespace {

std::vector<int> year_range(int n) {
    std::vector<int> years(n);
    for (int i = 0; i < n; ++i) years[i] = 1900 + 10 * i;
    return years;
}

// Closed-form active set {i-n .. i+n} clamped, restricted per mode.
std::set<int> expected_active(int n_maps, int anchor, TraceMode mode, int step) {
    std::set<int> out;
    for (int d = -step; d <= step; ++d) {
        if (mode == TraceMode::mono_past && d > 0) continue;
        if (mode == TraceMode::mono_future && d < 0) continue;
        const int idx = anchor + d;
        if (idx >= 0 && idx < n_maps) out.insert(idx);
    }
    return out;
}

int expected_termination(int n_maps, int anchor, TraceMode mode) {
    switch (mode) {
        case TraceMode::bi: return std::max(anchor, n_maps - 1 - anchor);
        case TraceMode::mono_past: return anchor;
        case TraceMode::mono_future: return n_maps - 1 - anchor;
    }
    return 0;
}

}  // namespace

TEST_CASE("anchor selection: exact, nearest, tie toward earlier") {
    CHECK(select_anchor({1973, 1980, 1990}, 1973) == 0);
    CHECK(select_anchor({1972, 1976}, 1975) == 1);  // |1| < |3|
    CHECK(select_anchor({1974, 1976}, 1975) == 0);  // tie -> earlier
    CHECK_THROWS_AS(select_anchor(std::vector<int>{}, 1975), Error);
}

TEST_CASE("bi-directional tracing from a mid-sequence anchor") {
    TraceState s = make_trace_state(year_range(9), 4, TraceMode::bi);
    CHECK(training_indices(s) == std::vector<int>{4});
    CHECK(s.label_sources.at(4).ground_truth);

    StepResult r1 = next_step(s);
    CHECK(r1.new_indices == std::vector<int>{3, 5});
    CHECK(s.step == 1);
    StepResult r2 = next_step(s);
    CHECK(r2.new_indices == std::vector<int>{2, 6});
    CHECK(training_indices(s) == std::vector<int>{2, 3, 4, 5, 6});
    next_step(s);
    StepResult r4 = next_step(s);
    CHECK(r4.new_indices == std::vector<int>{0, 8});
    StepResult r5 = next_step(s);
    CHECK(r5.exhausted);
    CHECK(s.step == 4);

    // pseudo-labels for indices added at step n come from the step n-1 model
    CHECK(s.label_sources.at(3).produced_by_step == 0);
    CHECK(s.label_sources.at(6).produced_by_step == 1);
    CHECK(s.label_sources.at(0).produced_by_step == 3);
}

TEST_CASE("mono-past tracing adds one older map per step") {
    TraceState s = make_trace_state(year_range(5), 4, TraceMode::mono_past);
    for (int step = 1; step <= 4; ++step) {
        StepResult r = next_step(s);
        REQUIRE(r.new_indices.size() == 1);
        CHECK(r.new_indices[0] == 4 - step);
    }
    CHECK(next_step(s).exhausted);
}

TEST_CASE("mono-past from anchor 8: cumulative set at step 3") {
    TraceState s = make_trace_state(year_range(9), 8, TraceMode::mono_past);
    next_step(s);
    next_step(s);
    next_step(s);
    CHECK(training_indices(s) == std::vector<int>{5, 6, 7, 8});
}

TEST_CASE("single-map sequence is immediately exhausted") {
    TraceState s = make_trace_state(year_range(1), 0, TraceMode::bi);
    StepResult r = next_step(s);
    CHECK(r.exhausted);
    CHECK(s.step == 0);
    CHECK(training_indices(s) == std::vector<int>{0});
}

TEST_CASE("asymmetric exhaustion keeps stepping on the remaining side") {
    TraceState s = make_trace_state(year_range(6), 1, TraceMode::bi);
    CHECK(next_step(s).new_indices == std::vector<int>{0, 2});
    CHECK(next_step(s).new_indices == std::vector<int>{3});  // past side exhausted
    CHECK(next_step(s).new_indices == std::vector<int>{4});
    CHECK(next_step(s).new_indices == std::vector<int>{5});
    CHECK(next_step(s).exhausted);
}

TEST_CASE("exhaustive enumeration N<=12 matches the closed form") {
    for (int n = 1; n <= 12; ++n) {
        for (int anchor = 0; anchor < n; ++anchor) {
            for (TraceMode mode : {TraceMode::bi, TraceMode::mono_past, TraceMode::mono_future}) {
                TraceState s = make_trace_state(year_range(n), anchor, mode);
                int steps = 0;
                while (true) {
                    StepResult r = next_step(s);
                    if (r.exhausted) break;
                    ++steps;
                    const auto expect = expected_active(n, anchor, mode, steps);
                    const auto got = training_indices(s);
                    REQUIRE(std::set<int>(got.begin(), got.end()) == expect);
                    REQUIRE(s.step == steps);
                }
                REQUIRE(steps == expected_termination(n, anchor, mode));
                // growth bound: at most 2 per step (bi), 1 (mono)
                REQUIRE((int)s.active.size() <= 1 + steps * (mode == TraceMode::bi ? 2 : 1));
            }
        }
    }
}

TEST_CASE("invalid construction is rejected") {
    CHECK_THROWS_AS(make_trace_state({}, 0, TraceMode::bi), Error);
    CHECK_THROWS_AS(make_trace_state(year_range(3), 5, TraceMode::bi), Error);
    CHECK(trace_mode_from_name("bi") == TraceMode::bi);
    CHECK(trace_mode_from_name("mono") == TraceMode::mono_past);
    CHECK_THROWS_AS(trace_mode_from_name("sideways"), Error);
}
