#pragma once

#include <cstdint>
#include <iosfwd>

#include "beliefdb/store.hpp"

namespace beliefdb::bench {

enum class Participation { uniform, zipf };

struct GenParams {
    std::int64_t m = 10;
    std::int64_t n = 1000;
    std::vector<double> depth_dist = {1.0 / 3, 1.0 / 3, 1.0 / 3}; // Pr[d=0], Pr[d=1], ...
    Participation participation = Participation::uniform;
    std::uint64_t seed = 1;
    std::int64_t key_pool = 0;    // 0 means n/10 (min 1)
    double negative_prob = 0.2;   // chance a statement is negative
    double conflict_prob = 0.1;   // chance a positive reuses a key with new values

    std::int64_t effective_key_pool() const {
        if (key_pool > 0) return key_pool;
        return std::max<std::int64_t>(1, n / 10);
    }
    void check() const; // throws on out-of-range parameters
};

// Single Sightings-shaped content relation the generator annotates.
Schema bench_schema();

// Exactly n distinct statements forming a consistent belief database; draws
// that would break consistency are redrawn within the same depth. Deterministic
// in the seed.
std::vector<BeliefStatement> generate(const GenParams& params);

// Fresh store with users u1..um and all generated statements inserted.
Store build_store(const GenParams& params);

struct OverheadCell {
    GenParams params;
    SizeReport report;
    double seconds = 0;
};

std::vector<OverheadCell> run_overhead(const std::vector<GenParams>& grid, std::ostream* progress);

struct QueryTiming {
    std::string name;
    double mean_ms = 0;
    double stddev_ms = 0;
    std::size_t result_size = 0;
};

// Times the seven workload queries (content queries at path depths 0..4, the
// conflict query and the user query) with translate+evaluate per repetition.
std::vector<QueryTiming> run_queries(const Store& store, int repetitions);

void write_overhead_csv(std::ostream& out, const std::vector<OverheadCell>& cells);
void write_query_csv(std::ostream& out, const std::vector<QueryTiming>& timings);

} // namespace beliefdb::bench
