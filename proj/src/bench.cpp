#include "beliefdb/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "beliefdb/query.hpp"
#include "beliefdb/update.hpp"

namespace beliefdb::bench {

void GenParams::check() const {
    if (m < 1) throw std::invalid_argument("m must be at least 1");
    if (n < 0) throw std::invalid_argument("n must be non-negative");
    if (depth_dist.empty()) throw std::invalid_argument("depth distribution is empty");
    double sum = 0;
    for (double p : depth_dist) {
        if (p < 0 || p > 1) throw std::invalid_argument("depth probabilities lie in [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("depth distribution must sum to 1");
    if (negative_prob < 0 || negative_prob > 1 || conflict_prob < 0 || conflict_prob > 1)
        throw std::invalid_argument("probabilities lie in [0,1]");
}

Schema bench_schema() {
    Schema s;
    s.add_relation({"Sightings",
                    {{"sid", ValueType::text},
                     {"uid", ValueType::text},
                     {"species", ValueType::text},
                     {"date", ValueType::text},
                     {"location", ValueType::text}}});
    return s;
}

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    std::uint64_t u64() { return gen(); }
    std::int64_t below(std::int64_t k) { return static_cast<std::int64_t>(u64() % static_cast<std::uint64_t>(k)); }
    double unit() { return double(u64() >> 11) * 0x1.0p-53; }
};

struct UserSampler {
    std::vector<double> cumulative; // per rank
    std::int64_t m;

    UserSampler(std::int64_t users, Participation p) : m(users) {
        if (p == Participation::zipf) {
            // weight(rank r) proportional to 2^-r: user 1 covers half the
            // annotations, user 2 a quarter, and so on.
            double total = 0, w = 1;
            std::vector<double> weights;
            for (std::int64_t r = 0; r < m; ++r, w /= 2) {
                weights.push_back(w);
                total += w;
            }
            double acc = 0;
            for (double x : weights) cumulative.push_back((acc += x) / total);
        }
    }
    UserId draw(Rng& rng) const {
        if (cumulative.empty()) return 1 + rng.below(m);
        double x = rng.unit();
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), x);
        return 1 + static_cast<UserId>(it - cumulative.begin());
    }
};

Tuple bench_tuple(std::int64_t key, std::int64_t variant, std::int64_t m) {
    std::string sid = "s" + std::to_string(key);
    std::string uid = "u" + std::to_string(1 + (key * 7) % m);
    std::string species =
        variant == 0 ? "sp" + std::to_string(key) : "sp" + std::to_string(key) + "v" + std::to_string(variant);
    std::string location = "site" + std::to_string(key % 25);
    return {"Sightings", {Value(sid), Value(uid), Value(species), Value("2008-06-14"), Value(location)}};
}

// Explicit world shadow sufficient for the Gamma checks and duplicate detection.
struct ShadowWorld {
    std::map<Value, Tuple> positive_by_key;
    std::set<Tuple> negative;
};

} // namespace

std::vector<BeliefStatement> generate(const GenParams& params) {
    params.check();
    Rng rng(params.seed);
    UserSampler sampler(params.m, params.participation);
    std::int64_t pool = params.effective_key_pool();

    std::map<BeliefPath, ShadowWorld> shadow;
    std::map<std::int64_t, std::int64_t> variant_count; // per key
    std::vector<BeliefStatement> out;
    out.reserve(static_cast<std::size_t>(params.n));

    std::vector<double> depth_cum;
    double acc = 0;
    for (double p : params.depth_dist) depth_cum.push_back(acc += p);

    auto draw_depth = [&] {
        double x = rng.unit();
        std::size_t d = static_cast<std::size_t>(
            std::lower_bound(depth_cum.begin(), depth_cum.end(), x) - depth_cum.begin());
        if (d >= depth_cum.size()) d = depth_cum.size() - 1;
        // with a single user only the root and his own world exist
        if (params.m == 1 && d > 1) d = 1;
        return d;
    };

    while (out.size() < static_cast<std::size_t>(params.n)) {
        std::size_t d = draw_depth();
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            BeliefPath path;
            while (path.depth() < d) {
                UserId u = sampler.draw(rng);
                if (!path.empty() && path.users.back() == u) continue;
                path.users.push_back(u);
            }
            std::int64_t key = rng.below(pool);
            Sign sign = rng.unit() < params.negative_prob ? Sign::negative : Sign::positive;
            // positives reuse a key with fresh values at the conflict rate;
            // negatives may also disagree with a not-yet-stated alternative
            std::int64_t variant = 0;
            if (rng.unit() < params.conflict_prob) variant = ++variant_count[key];
            Tuple tuple = bench_tuple(key, variant, params.m);

            ShadowWorld& world = shadow[path];
            if (sign == Sign::positive) {
                if (world.negative.count(tuple)) continue;
                auto it = world.positive_by_key.find(tuple.key());
                if (it != world.positive_by_key.end()) continue; // occupied key or duplicate
                world.positive_by_key.emplace(tuple.key(), tuple);
            } else {
                if (world.positive_by_key.count(tuple.key()) &&
                    world.positive_by_key.at(tuple.key()) == tuple)
                    continue;
                if (!world.negative.insert(tuple).second) continue; // duplicate
            }
            out.push_back({std::move(path), std::move(tuple), sign});
            accepted = true;
        }
        if (!accepted)
            throw std::runtime_error("generator could not place a statement; key pool too small");
    }
    return out;
}

Store build_store(const GenParams& params) {
    Store st(bench_schema());
    for (std::int64_t i = 1; i <= params.m; ++i) add_user(st, "u" + std::to_string(i));
    for (const BeliefStatement& stmt : generate(params)) {
        UpdateOutcome out = insert_statement(st, stmt);
        if (!out.success)
            throw std::logic_error("generated statement rejected by the store: " + stmt.to_display());
    }
    return st;
}

std::vector<OverheadCell> run_overhead(const std::vector<GenParams>& grid, std::ostream* progress) {
    std::vector<OverheadCell> cells;
    for (const GenParams& params : grid) {
        auto t0 = std::chrono::steady_clock::now();
        Store st = build_store(params);
        OverheadCell cell;
        cell.params = params;
        cell.report = st.stats();
        cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (progress)
            *progress << "m=" << params.m << " n=" << params.n << " "
                      << (params.participation == Participation::zipf ? "zipf" : "uniform")
                      << " -> N=" << cell.report.world_count << " total=" << cell.report.total_rows
                      << " overhead=" << cell.report.overhead(static_cast<std::size_t>(params.n))
                      << " (" << cell.seconds << "s)\n";
        cells.push_back(std::move(cell));
    }
    return cells;
}

namespace {

Bcq content_query(const std::vector<UserId>& path) {
    Bcq q;
    Subgoal g;
    g.relation = "Sightings";
    g.sign = Sign::positive;
    for (UserId u : path) g.path.push_back(u);
    g.args = {VarRef{"x"}, VarRef{"a2"}, VarRef{"y"}, VarRef{"a4"}, VarRef{"a5"}};
    q.subgoals.push_back(std::move(g));
    q.head = {{"x", false}, {"y", false}};
    return q;
}

Bcq conflict_query() {
    // what Bob believes Alice believes but disbelieves himself
    Bcq q;
    Subgoal pos;
    pos.relation = "Sightings";
    pos.sign = Sign::positive;
    pos.path = {UserId{2}, UserId{1}};
    pos.args = {VarRef{"x"}, VarRef{"z"}, VarRef{"y"}, VarRef{"u"}, VarRef{"v"}};
    Subgoal neg = pos;
    neg.sign = Sign::negative;
    neg.path = {UserId{2}};
    q.subgoals = {std::move(pos), std::move(neg)};
    q.head = {{"x", false}, {"y", false}};
    return q;
}

Bcq user_query(const Value& location) {
    // who disagrees with one of user 1's sightings at the given location
    Bcq q;
    Subgoal neg;
    neg.relation = "Sightings";
    neg.sign = Sign::negative;
    neg.path = {VarRef{"x"}};
    neg.args = {VarRef{"k"}, VarRef{"a"}, VarRef{"b"}, VarRef{"c"}, location};
    Subgoal pos = neg;
    pos.sign = Sign::positive;
    pos.path = {UserId{1}};
    q.subgoals = {std::move(neg), std::move(pos)};
    q.head = {{"x", false}};
    return q;
}

} // namespace

std::vector<QueryTiming> run_queries(const Store& store, int repetitions) {
    if (repetitions < 1) repetitions = 1;
    std::vector<std::pair<std::string, Bcq>> workload;
    const std::vector<std::vector<UserId>> paths{{}, {1}, {2, 1}, {1, 2, 1}, {2, 1, 2, 1}};
    for (std::size_t d = 0; d < paths.size(); ++d)
        workload.push_back({"q1_" + std::to_string(d), content_query(paths[d])});
    workload.push_back({"q2", conflict_query()});
    workload.push_back({"q3", user_query(Value("site0"))});

    std::vector<QueryTiming> out;
    for (const auto& [name, q] : workload) {
        std::vector<double> samples;
        std::size_t result_size = 0;
        for (int r = 0; r < repetitions; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            Plan plan = translate(q, store.schema);
            ResultSet rs = evaluate(plan, store);
            auto dt = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
            samples.push_back(dt.count());
            result_size = rs.rows.size();
        }
        double mean = 0;
        for (double s : samples) mean += s;
        mean /= double(samples.size());
        double var = 0;
        for (double s : samples) var += (s - mean) * (s - mean);
        var /= double(samples.size());
        out.push_back({name, mean, std::sqrt(var), result_size});
    }
    return out;
}

void write_overhead_csv(std::ostream& out, const std::vector<OverheadCell>& cells) {
    out << "m,n,participation,depth_dist,seed,key_pool,negative_prob,conflict_prob,"
           "worlds,total_rows,overhead,seconds\n";
    for (const OverheadCell& c : cells) {
        out << c.params.m << "," << c.params.n << ","
            << (c.params.participation == Participation::zipf ? "zipf" : "uniform") << ",";
        for (std::size_t i = 0; i < c.params.depth_dist.size(); ++i)
            out << (i ? ";" : "") << c.params.depth_dist[i];
        out << "," << c.params.seed << "," << c.params.effective_key_pool() << ","
            << c.params.negative_prob << "," << c.params.conflict_prob << ","
            << c.report.world_count << "," << c.report.total_rows << ","
            << c.report.overhead(static_cast<std::size_t>(c.params.n)) << "," << c.seconds << "\n";
    }
}

void write_query_csv(std::ostream& out, const std::vector<QueryTiming>& timings) {
    out << "query,mean_ms,stddev_ms,result_size\n";
    for (const QueryTiming& t : timings)
        out << t.name << "," << t.mean_ms << "," << t.stddev_ms << "," << t.result_size << "\n";
}

} // namespace beliefdb::bench
