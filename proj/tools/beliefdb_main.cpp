#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "beliefdb/bench.hpp"
#include "beliefdb/session.hpp"

namespace {

using namespace beliefdb;

constexpr int kExitOk = 0;
constexpr int kExitSemantic = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCorrupt = 3;

struct ExitError {
    int code;
    std::string message;
};

// Advisory lock; one writing CLI session per .bdb file.
class DbLock {
public:
    explicit DbLock(const std::string& db_path) : path_(db_path + ".lock") {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw ExitError{kExitUsage, "database is locked (remove " + path_ + " if stale)"};
        std::string pid = std::to_string(::getpid()) + "\n";
        ssize_t ignored = ::write(fd, pid.data(), pid.size());
        (void)ignored;
        ::close(fd);
    }
    ~DbLock() { ::unlink(path_.c_str()); }
    DbLock(const DbLock&) = delete;
    DbLock& operator=(const DbLock&) = delete;

private:
    std::string path_;
};

bool file_exists(const std::string& path) { return ::access(path.c_str(), F_OK) == 0; }

Store load_db(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ExitError{kExitUsage, "cannot open " + path};
    try {
        return load(in);
    } catch (const std::exception& e) {
        throw ExitError{kExitCorrupt, path + ": " + e.what()};
    }
}

Store load_or_create(const std::string& path) {
    if (!file_exists(path)) return Store{};
    return load_db(path);
}

void save_db(const Store& store, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ExitError{kExitUsage, "cannot write " + tmp};
        dump(store, out);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ExitError{kExitUsage, "cannot replace " + path};
}

void print_result_table(std::ostream& out, const ResultSet& rs, const std::string& format) {
    if (format == "csv") {
        for (std::size_t i = 0; i < rs.columns.size(); ++i)
            out << (i ? "," : "") << rs.columns[i];
        out << "\n";
        for (const auto& row : rs.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i].to_display();
            out << "\n";
        }
        return;
    }
    std::vector<std::size_t> widths;
    for (const std::string& c : rs.columns) widths.push_back(c.size());
    for (const auto& row : rs.rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            widths[i] = std::max(widths[i], row[i].to_display().size());
    auto line = [&](char fill, char sep) {
        for (std::size_t i = 0; i < widths.size(); ++i) {
            out << (i ? std::string(1, sep) : "");
            out << std::string(widths[i] + 2, fill);
        }
        out << "\n";
    };
    for (std::size_t i = 0; i < rs.columns.size(); ++i) {
        out << (i ? "|" : "") << " " << rs.columns[i]
            << std::string(widths[i] - rs.columns[i].size() + 1, ' ');
    }
    out << "\n";
    line('-', '+');
    for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string text = row[i].to_display();
            out << (i ? "|" : "") << " " << text << std::string(widths[i] - text.size() + 1, ' ');
        }
        out << "\n";
    }
    out << "(" << rs.rows.size() << " row" << (rs.rows.size() == 1 ? "" : "s") << ")\n";
}

// Splits buffered REPL input at ';' terminators, respecting quoted strings.
std::vector<std::string> take_complete_statements(std::string& buffer) {
    std::vector<std::string> out;
    std::size_t start = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        char c = buffer[i];
        if (c == '\'') {
            in_string = !in_string;
        } else if (c == ';' && !in_string) {
            out.push_back(buffer.substr(start, i - start));
            start = i + 1;
        }
    }
    buffer.erase(0, start);
    return out;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

int cmd_repl(const std::string& db_path, const std::string& format) {
    DbLock lock(db_path);
    Store store = load_or_create(db_path);
    bool tty = ::isatty(STDIN_FILENO);
    if (tty)
        std::cout << "beliefdb — enter BeliefSQL terminated by ';', \\q to quit\n";
    std::string buffer, physical;
    while (true) {
        if (tty) std::cout << (buffer.empty() ? "bdb> " : "...> ") << std::flush;
        if (!std::getline(std::cin, physical)) break;
        std::string trimmed = physical;
        if (!trimmed.empty() && trimmed.back() == '\r') trimmed.pop_back();
        if (buffer.empty() && (trimmed == "\\q" || trimmed == "\\quit")) break;
        buffer += trimmed;
        buffer += "\n";
        for (const std::string& text : take_complete_statements(buffer)) {
            if (blank(text)) continue;
            try {
                ExecResult r = execute_statement(store, sql::parse_statement(text));
                if (r.kind == ExecResult::Kind::rows) {
                    print_result_table(std::cout, r.rows, format);
                } else {
                    std::cout << r.message << "\n";
                    if (r.mutated() || r.kind == ExecResult::Kind::meta) save_db(store, db_path);
                }
            } catch (const sql::ParseError& e) {
                std::cout << "error: " << e.what() << "\n";
            } catch (const std::exception& e) {
                std::cout << "error: " << e.what() << "\n";
            }
        }
    }
    save_db(store, db_path);
    return kExitOk;
}

int cmd_exec(const std::string& db_path, const std::string& script_path, bool strict,
             const std::string& format) {
    DbLock lock(db_path);
    Store store = load_or_create(db_path);
    std::ifstream in(script_path);
    if (!in) throw ExitError{kExitUsage, "cannot open script " + script_path};
    std::stringstream ss;
    ss << in.rdbuf();
    std::vector<sql::Statement> statements;
    try {
        statements = sql::parse_script(ss.str());
    } catch (const sql::ParseError& e) {
        std::cerr << script_path << ": " << e.what() << "\n";
        return kExitSemantic;
    }
    for (const sql::Statement& stmt : statements) {
        try {
            ExecResult r = execute_statement(store, stmt);
            if (r.kind == ExecResult::Kind::rows)
                print_result_table(std::cout, r.rows, format);
            else
                std::cout << r.message << "\n";
            if (r.rejected > 0 && strict) {
                std::cerr << "strict mode: stopping at rejected statement\n";
                return kExitSemantic;
            }
        } catch (const std::exception& e) {
            std::cerr << script_path << ": " << e.what() << "\n";
            return kExitSemantic;
        }
    }
    save_db(store, db_path);
    return kExitOk;
}

int cmd_stats(const std::string& db_path, long long n_override, const std::string& format) {
    Store store = load_db(db_path);
    SizeReport r = store.stats();
    std::size_t n = n_override > 0 ? static_cast<std::size_t>(n_override) : r.explicit_rows;
    if (format == "csv") {
        std::cout << "relation,rows\n";
        for (const auto& [name, rows] : r.relation_rows) std::cout << name << "," << rows << "\n";
        std::cout << "total," << r.total_rows << "\n";
    } else {
        std::cout << "users (m):        " << r.user_count << "\n";
        std::cout << "worlds (N):       " << r.world_count << "\n";
        std::cout << "annotations (n):  " << n << "\n";
        for (const auto& [name, rows] : r.relation_rows)
            std::cout << "  |" << name << "| = " << rows << "\n";
        std::cout << "total rows:       " << r.total_rows << "\n";
        std::cout << "relative overhead: " << r.overhead(n) << "\n";
    }
    return kExitOk;
}

sql::Statement insert_statement_ast(const BeliefStatement& stmt, const Store& store) {
    sql::InsertStmt ast;
    if (!stmt.path.empty()) {
        sql::BeliefPrefix prefix;
        for (UserId u : stmt.path.users) {
            const UserRow* row = store.user_by_id(u);
            prefix.users.push_back({row ? row->name : std::to_string(u), {}});
        }
        prefix.negated = stmt.sign == Sign::negative;
        ast.prefix = std::move(prefix);
    } else if (stmt.sign == Sign::negative) {
        // Fig.-1 grammar cannot express a root-level negative; the store can
        // hold one, so refuse to write a lossy script.
        throw ExitError{kExitUsage, "root-level negative statements are not expressible in BeliefSQL"};
    }
    ast.relation = stmt.tuple.relation;
    for (const Value& v : stmt.tuple.values) ast.values.push_back({v, {}});
    return ast;
}

int cmd_gen(const bench::GenParams& params, const std::string& out_path) {
    if (out_path.size() > 5 && out_path.substr(out_path.size() - 5) == ".bsql") {
        Store st(bench::bench_schema());
        for (std::int64_t i = 1; i <= params.m; ++i) add_user(st, "u" + std::to_string(i));
        std::ofstream out(out_path);
        if (!out) throw ExitError{kExitUsage, "cannot write " + out_path};
        const RelationDef& rel = st.schema.relations.front();
        out << "create relation " << rel.name << " (";
        for (std::size_t i = 0; i < rel.attributes.size(); ++i)
            out << (i ? ", " : "") << rel.attributes[i].first << " "
                << (rel.attributes[i].second == ValueType::text ? "text" : "int");
        out << ");\n";
        for (std::int64_t i = 1; i <= params.m; ++i) out << "adduser 'u" << i << "';\n";
        for (const BeliefStatement& stmt : bench::generate(params))
            out << sql::print_statement(insert_statement_ast(stmt, st)) << ";\n";
        return kExitOk;
    }
    Store st = bench::build_store(params);
    std::ofstream out(out_path);
    if (!out) throw ExitError{kExitUsage, "cannot write " + out_path};
    dump(st, out);
    return kExitOk;
}

int cmd_dump(const std::string& db_path) {
    Store store = load_db(db_path);
    dump(store, std::cout);
    return kExitOk;
}

std::vector<double> parse_depth_dist(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
    return out;
}

int cmd_bench(long long n, const std::string& ms, const std::string& participations,
              const std::string& depths, std::uint64_t seed, const std::string& report_path,
              bool queries, int reps) {
    if (queries) {
        bench::GenParams params;
        params.n = n;
        params.seed = seed;
        params.m = 10;
        Store st = bench::build_store(params);
        auto timings = bench::run_queries(st, reps);
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            bench::write_query_csv(out, timings);
        }
        bench::write_query_csv(std::cout, timings);
        return kExitOk;
    }
    std::vector<bench::GenParams> grid;
    std::stringstream mstream(ms);
    std::string mpart;
    while (std::getline(mstream, mpart, ',')) {
        std::vector<bench::Participation> parts;
        if (participations == "both" || participations == "uniform")
            parts.push_back(bench::Participation::uniform);
        if (participations == "both" || participations == "zipf")
            parts.push_back(bench::Participation::zipf);
        std::stringstream dstream(depths);
        std::string drow;
        std::vector<std::vector<double>> depth_rows;
        while (std::getline(dstream, drow, ';')) depth_rows.push_back(parse_depth_dist(drow));
        for (bench::Participation p : parts)
            for (const auto& d : depth_rows) {
                bench::GenParams params;
                params.m = std::stoll(mpart);
                params.n = n;
                params.participation = p;
                params.depth_dist = d;
                params.seed = seed;
                grid.push_back(params);
            }
    }
    auto cells = bench::run_overhead(grid, &std::cerr);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw ExitError{kExitUsage, "cannot write " + report_path};
        bench::write_overhead_csv(out, cells);
    }
    bench::write_overhead_csv(std::cout, cells);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"beliefdb — an embedded belief database"};
    app.require_subcommand(1);

    std::string db_path, script_path, out_path, report_path;
    std::string format = "table";
    bool strict = false;
    long long n_override = 0;

    bench::GenParams gen_params;
    std::string depth_text = "0.333333,0.333333,0.333334";
    std::string participation_text = "uniform";

    auto* repl = app.add_subcommand("repl", "interactive BeliefSQL shell");
    repl->add_option("--db", db_path, "database file (.bdb)")->required();
    repl->add_option("--format", format, "table or csv");

    auto* exec = app.add_subcommand("exec", "run a .bsql script");
    exec->add_option("--db", db_path, "database file (.bdb)")->required();
    exec->add_option("--file", script_path, "script path")->required();
    exec->add_option("--format", format, "table or csv");
    exec->add_flag("--strict", strict, "stop with exit 1 at the first rejected statement");

    auto* stats = app.add_subcommand("stats", "size report for a database");
    stats->add_option("--db", db_path)->required();
    stats->add_option("--n", n_override, "annotation count for the overhead (default: stored)");
    stats->add_option("--format", format, "table or csv");

    auto* dumpcmd = app.add_subcommand("dump", "print a database in the .bdb text format");
    dumpcmd->add_option("--db", db_path)->required();

    auto* gen = app.add_subcommand("gen", "generate synthetic annotations");
    gen->add_option("--m", gen_params.m, "user count");
    gen->add_option("--n", gen_params.n, "annotation count");
    gen->add_option("--seed", gen_params.seed, "rng seed");
    gen->add_option("--depth", depth_text, "comma-separated Pr[d=0],Pr[d=1],...");
    gen->add_option("--participation", participation_text, "uniform or zipf");
    gen->add_option("--key-pool", gen_params.key_pool, "distinct external keys (default n/10)");
    gen->add_option("--negative-prob", gen_params.negative_prob);
    gen->add_option("--conflict-prob", gen_params.conflict_prob);
    gen->add_option("--out", out_path, "output file (.bsql script or .bdb store)")->required();

    long long bench_n = 10000;
    std::string bench_ms = "10,100";
    std::string bench_part = "both";
    std::string bench_depths = "0.333333,0.333333,0.333334;0.8,0.19,0.01;0.199,0.8,0.001";
    std::uint64_t bench_seed = 1;
    bool bench_queries = false;
    int bench_reps = 11;
    auto* benchcmd = app.add_subcommand("bench", "overhead grid or query timings");
    benchcmd->add_option("--n", bench_n);
    benchcmd->add_option("--grid-m", bench_ms, "comma-separated user counts");
    benchcmd->add_option("--participation", bench_part, "uniform, zipf or both");
    benchcmd->add_option("--depths", bench_depths, "';'-separated depth distributions");
    benchcmd->add_option("--seed", bench_seed);
    benchcmd->add_option("--report", report_path, "CSV output path");
    benchcmd->add_flag("--queries", bench_queries, "time the workload queries instead");
    benchcmd->add_option("--reps", bench_reps, "repetitions per query");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (repl->parsed()) return cmd_repl(db_path, format);
        if (exec->parsed()) return cmd_exec(db_path, script_path, strict, format);
        if (stats->parsed()) return cmd_stats(db_path, n_override, format);
        if (dumpcmd->parsed()) return cmd_dump(db_path);
        if (gen->parsed()) {
            gen_params.depth_dist = parse_depth_dist(depth_text);
            gen_params.participation = participation_text == "zipf" ? bench::Participation::zipf
                                                                    : bench::Participation::uniform;
            return cmd_gen(gen_params, out_path);
        }
        if (benchcmd->parsed())
            return cmd_bench(bench_n, bench_ms, bench_part, bench_depths, bench_seed, report_path,
                             bench_queries, bench_reps);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
