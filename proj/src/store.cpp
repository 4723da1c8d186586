#include "beliefdb/store.hpp"

#include "beliefdb/kripke.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace beliefdb {

void KeySlot::push(const VRow& row) {
    if (spill_) {
        if (count_ == capacity_) {
            std::uint32_t cap = capacity_ * 2;
            VRow* bigger = new VRow[cap];
            std::memcpy(bigger, spill_, count_ * sizeof(VRow));
            delete[] spill_;
            spill_ = bigger;
            capacity_ = cap;
        }
        spill_[count_++] = row;
        return;
    }
    if (count_ < 2) {
        inline_[count_++] = row;
        return;
    }
    capacity_ = 4;
    spill_ = new VRow[capacity_];
    std::memcpy(spill_, inline_, 2 * sizeof(VRow));
    spill_[count_++] = row;
}

void KeySlot::release() {
    delete[] spill_;
    spill_ = nullptr;
    count_ = 0;
    capacity_ = 2;
}

void KeySlot::copy_from(const KeySlot& other) {
    count_ = other.count_;
    if (other.spill_) {
        capacity_ = other.capacity_;
        spill_ = new VRow[capacity_];
        std::memcpy(spill_, other.spill_, count_ * sizeof(VRow));
    } else {
        capacity_ = 2;
        spill_ = nullptr;
        std::memcpy(inline_, other.inline_, sizeof(inline_));
    }
}

void KeySlot::move_from(KeySlot&& other) noexcept {
    count_ = other.count_;
    capacity_ = other.capacity_;
    spill_ = other.spill_;
    std::memcpy(inline_, other.inline_, sizeof(inline_));
    other.spill_ = nullptr;
    other.count_ = 0;
    other.capacity_ = 2;
}

KeyId RelationStar::intern_key(const Value& key) {
    auto it = key_ids.find(key);
    if (it != key_ids.end()) return it->second;
    KeyId id = static_cast<KeyId>(key_values.size());
    key_values.push_back(key);
    key_ids.emplace(key, id);
    return id;
}

Store::Store() {
    depth[0] = 0;
    edges[0] = {};
    wids.push_back(0);
}

Store::Store(Schema s) : Store() {
    schema = std::move(s);
    for (const auto& rel : schema.relations) {
        rstar[rel.name];
        val[rel.name];
    }
}

void Store::add_relation(RelationDef def) {
    std::string name = def.name;
    schema.add_relation(std::move(def));
    rstar[name];
    val[name];
}

const UserRow* Store::user_by_id(UserId uid) const {
    for (const UserRow& u : users)
        if (u.uid == uid) return &u;
    return nullptr;
}

const UserRow* Store::user_by_name(const std::string& name) const {
    for (const UserRow& u : users)
        if (u.name == name) return &u;
    return nullptr;
}

const Wid* Store::edge_target(Wid from, UserId u) const {
    auto it = edges.find(from);
    if (it == edges.end()) return nullptr;
    const auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), u,
                                [](const auto& e, UserId id) { return e.first < id; });
    if (pos == list.end() || pos->first != u) return nullptr;
    return &pos->second;
}

void Store::set_edge(Wid from, UserId u, Wid to) {
    auto& list = edges[from];
    auto pos = std::lower_bound(list.begin(), list.end(), u,
                                [](const auto& e, UserId id) { return e.first < id; });
    if (pos != list.end() && pos->first == u)
        pos->second = to;
    else
        list.insert(pos, {u, to});
}

std::optional<Wid> Store::follow(Wid from, std::span<const UserId> labels) const {
    Wid at = from;
    for (UserId u : labels) {
        const Wid* next = edge_target(at, u);
        if (!next) return std::nullopt;
        at = *next;
    }
    return at;
}

const KeySlot* Store::slot(const std::string& relation, Wid w, KeyId key) const {
    auto rel_it = val.find(relation);
    if (rel_it == val.end()) return nullptr;
    auto world_it = rel_it->second.by_world.find(w);
    if (world_it == rel_it->second.by_world.end()) return nullptr;
    auto slot_it = world_it->second.find(key);
    if (slot_it == world_it->second.end()) return nullptr;
    return &slot_it->second;
}

VRow* Store::find_row(const std::string& relation, Wid w, KeyId key, Tid tid) {
    auto rel_it = val.find(relation);
    if (rel_it == val.end()) return nullptr;
    auto world_it = rel_it->second.by_world.find(w);
    if (world_it == rel_it->second.by_world.end()) return nullptr;
    auto slot_it = world_it->second.find(key);
    if (slot_it == world_it->second.end()) return nullptr;
    return slot_it->second.find(tid);
}

void Store::v_insert(const std::string& relation, Wid w, KeyId key, const VRow& row) {
    KeySlot& s = val.at(relation).by_world[w][key];
    if (s.find(row.tid)) return; // V is keyed by (wid, tid)
    s.push(row);
    val.at(relation).row_count += 1;
    rstar.at(relation).rows.at(row.tid).refs += 1;
}

Tid Store::find_tid(const std::string& relation, const std::vector<Value>& values) const {
    auto rel_it = rstar.find(relation);
    if (rel_it == rstar.end()) return 0;
    auto it = rel_it->second.tid_by_values.find(values);
    return it == rel_it->second.tid_by_values.end() ? 0 : it->second;
}

Tid Store::ensure_tid(const std::string& relation, const std::vector<Value>& values) {
    RelationStar& star = rstar.at(relation);
    auto it = star.tid_by_values.find(values);
    if (it != star.tid_by_values.end()) return it->second;
    Tid tid = next_tid++;
    KeyId key = star.intern_key(values.at(0));
    star.rows.emplace(tid, StarRow{values, key, 0});
    star.tid_by_values.emplace(values, tid);
    return tid;
}

void Store::unref_tid(const std::string& relation, Tid tid) {
    RelationStar& star = rstar.at(relation);
    StarRow& row = star.rows.at(tid);
    if (--row.refs > 0) return;
    star.tid_by_values.erase(row.values);
    star.rows.erase(tid);
}

std::map<Wid, BeliefPath> Store::reconstruct_paths() const {
    std::map<Wid, BeliefPath> paths;
    paths[0] = BeliefPath{};
    std::deque<Wid> queue{0};
    while (!queue.empty()) {
        Wid w = queue.front();
        queue.pop_front();
        auto it = edges.find(w);
        if (it == edges.end()) continue;
        int d = depth.at(w);
        for (const auto& [u, target] : it->second) {
            auto dit = depth.find(target);
            if (dit == depth.end())
                throw std::runtime_error("store: edge to unknown world " + std::to_string(target));
            if (dit->second != d + 1) continue; // back edge
            BeliefPath child = paths.at(w).append(u);
            if (!paths.emplace(target, child).second)
                throw std::runtime_error("store: world " + std::to_string(target) +
                                         " reachable by two forward edges");
            queue.push_back(target);
        }
    }
    if (paths.size() != wids.size())
        throw std::runtime_error("store: forward edges do not span all worlds");
    return paths;
}

SizeReport Store::stats() const {
    SizeReport r;
    r.user_count = users.size();
    r.world_count = wids.size();
    r.relation_rows["U"] = users.size();
    r.relation_rows["D"] = depth.size();
    r.relation_rows["S"] = suffix.size();
    std::size_t edge_rows = 0;
    for (const auto& [w, list] : edges) edge_rows += list.size();
    r.relation_rows["E"] = edge_rows;
    for (const auto& [name, star] : rstar) r.relation_rows[name + "*"] = star.rows.size();
    for (const auto& [name, v] : val) {
        r.relation_rows[name + "_V"] = v.row_count;
        for (const auto& [w, slots] : v.by_world)
            for (const auto& [key, slot] : slots)
                for (const VRow& row : slot.rows())
                    if (row.explicit_row) r.explicit_rows += 1;
    }
    for (const auto& [name, n] : r.relation_rows) r.total_rows += n;
    return r;
}

namespace {

BeliefPath path_dss(const BeliefPath& w, const std::map<BeliefPath, Wid>& by_path) {
    for (std::size_t from = 0; from <= w.depth(); ++from) {
        BeliefPath candidate = w.suffix_from(from);
        if (by_path.count(candidate)) return candidate;
    }
    throw std::runtime_error("store: root path missing from state set");
}

struct SortedVRowRef {
    Wid wid;
    KeyId key;
    VRow row;
};

// All V rows of one relation, ordered (wid, key value, R* values, sign).
std::vector<SortedVRowRef> sorted_rows(const Store& st, const std::string& relation) {
    const RelationVal& v = st.val.at(relation);
    const RelationStar& star = st.rstar.at(relation);
    std::vector<SortedVRowRef> out;
    out.reserve(v.row_count);
    for (const auto& [w, slots] : v.by_world)
        for (const auto& [key, slot] : slots)
            for (const VRow& row : slot.rows()) out.push_back({w, key, row});
    std::sort(out.begin(), out.end(), [&](const SortedVRowRef& a, const SortedVRowRef& b) {
        if (a.wid != b.wid) return a.wid < b.wid;
        if (a.key != b.key) {
            const Value& ka = star.key_value(a.key);
            const Value& kb = star.key_value(b.key);
            if (ka != kb) return ka < kb;
        }
        const auto& va = star.rows.at(a.row.tid).values;
        const auto& vb = star.rows.at(b.row.tid).values;
        if (va != vb) return va < vb;
        return a.row.sign < b.row.sign;
    });
    return out;
}

} // namespace

void Store::validate() const {
    auto paths = reconstruct_paths();
    std::map<BeliefPath, Wid> by_path;
    for (const auto& [w, p] : paths) {
        if (!p.well_formed())
            throw std::runtime_error("store: world " + std::to_string(w) + " has an ill-formed path");
        if (depth.at(w) != static_cast<int>(p.depth()))
            throw std::runtime_error("store: depth row of world " + std::to_string(w) +
                                     " disagrees with its path");
        by_path[p] = w;
    }
    if (!depth.count(0) || depth.at(0) != 0)
        throw std::runtime_error("store: missing root world");

    // Edges: the root carries one edge per user, every other world all users
    // but its own last one, and each edge targets the deepest suffix state.
    for (const auto& [w, p] : paths) {
        auto it = edges.find(w);
        std::size_t expected = users.empty() ? 0 : (p.empty() ? users.size() : users.size() - 1);
        std::size_t actual = it == edges.end() ? 0 : it->second.size();
        if (actual != expected)
            throw std::runtime_error("store: world " + std::to_string(w) + " has " +
                                     std::to_string(actual) + " edges, expected " +
                                     std::to_string(expected));
        if (it == edges.end()) continue;
        for (const auto& [u, target] : it->second) {
            if (!p.empty() && p.users.back() == u)
                throw std::runtime_error("store: edge repeats the last user of world " +
                                         std::to_string(w));
            BeliefPath want = path_dss(p.append(u), by_path);
            if (target != by_path.at(want))
                throw std::runtime_error("store: edge (" + std::to_string(w) + "," +
                                         std::to_string(u) + ") targets " + std::to_string(target) +
                                         ", expected " + std::to_string(by_path.at(want)));
        }
    }

    // S: exactly the non-root worlds, each pointing at dss of the path minus
    // its first user.
    if (suffix.size() != wids.size() - 1)
        throw std::runtime_error("store: |S| must be N-1");
    for (const auto& [w, p] : paths) {
        if (p.empty()) {
            if (suffix.count(w)) throw std::runtime_error("store: root world has a suffix row");
            continue;
        }
        auto it = suffix.find(w);
        if (it == suffix.end())
            throw std::runtime_error("store: world " + std::to_string(w) + " lacks a suffix row");
        BeliefPath want = path_dss(p.suffix_from(1), by_path);
        if (it->second != by_path.at(want))
            throw std::runtime_error("store: suffix row of world " + std::to_string(w) +
                                     " targets " + std::to_string(it->second) + ", expected " +
                                     std::to_string(by_path.at(want)));
    }

    // V and R*: key agreement, refcounts, per-world consistency, and implicit
    // content equal to the overriding union with the suffix-chain parent.
    for (const auto& [name, v] : val) {
        const RelationStar& star = rstar.at(name);
        std::unordered_map<Tid, std::int64_t> refs;
        for (const auto& [w, slots] : v.by_world) {
            if (!depth.count(w))
                throw std::runtime_error("store: V rows for unknown world " + std::to_string(w));
            for (const auto& [key, slot] : slots) {
                int positives = 0;
                for (const VRow& row : slot.rows()) {
                    auto star_it = star.rows.find(row.tid);
                    if (star_it == star.rows.end())
                        throw std::runtime_error("store: dangling tid " + std::to_string(row.tid) +
                                                 " in " + name + "_V");
                    if (star_it->second.key_id != key)
                        throw std::runtime_error("store: V key column disagrees with R* for tid " +
                                                 std::to_string(row.tid));
                    refs[row.tid] += 1;
                    if (row.sign == Sign::positive) ++positives;
                }
                if (positives > 1)
                    throw std::runtime_error("store: key conflict among positives in world " +
                                             std::to_string(w) + " of " + name);
            }
        }
        for (const auto& [tid, row] : star.rows)
            if (row.refs != refs[tid])
                throw std::runtime_error("store: refcount drift for tid " + std::to_string(tid));

        for (const auto& [w, slots] : v.by_world) {
            if (depth.at(w) == 0) {
                for (const auto& [key, slot] : slots)
                    for (const VRow& row : slot.rows())
                        if (!row.explicit_row)
                            throw std::runtime_error("store: root world holds an implicit row");
                continue;
            }
            Wid parent = suffix.at(w);
            for (const auto& [key, slot] : slots) {
                for (const VRow& row : slot.rows()) {
                    if (row.explicit_row) continue;
                    const KeySlot* up = nullptr;
                    if (auto rel_it = v.by_world.find(parent); rel_it != v.by_world.end()) {
                        auto sit = rel_it->second.find(key);
                        if (sit != rel_it->second.end()) up = &sit->second;
                    }
                    const VRow* origin = up ? up->find(row.tid) : nullptr;
                    if (!origin || origin->sign != row.sign)
                        throw std::runtime_error("store: implicit row of world " + std::to_string(w) +
                                                 " is not inherited from its suffix chain");
                }
            }
            // The other direction: every parent row not blocked by an explicit
            // row must be present.
            auto parent_it = v.by_world.find(parent);
            if (parent_it == v.by_world.end()) continue;
            auto world_it = v.by_world.find(w);
            for (const auto& [key, up_slot] : parent_it->second) {
                const KeySlot* here = nullptr;
                if (world_it != v.by_world.end()) {
                    auto sit = world_it->second.find(key);
                    if (sit != world_it->second.end()) here = &sit->second;
                }
                for (const VRow& up : up_slot.rows()) {
                    bool blocked = false, present = false;
                    if (here) {
                        for (const VRow& row : here->rows()) {
                            if (row.tid == up.tid && row.sign == up.sign) present = true;
                            if (!row.explicit_row) continue;
                            if (up.sign == Sign::positive &&
                                (row.sign == Sign::positive ||
                                 (row.tid == up.tid && row.sign == Sign::negative)))
                                blocked = true;
                            if (up.sign == Sign::negative && row.tid == up.tid &&
                                row.sign == Sign::positive)
                                blocked = true;
                        }
                    }
                    if (!blocked && !present)
                        throw std::runtime_error("store: world " + std::to_string(w) +
                                                 " is missing an inherited row for tid " +
                                                 std::to_string(up.tid));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// materialize

Store materialize(const BeliefDatabase& db, const std::map<UserId, std::string>& user_names) {
    CanonicalKripke k = build_canonical(db);

    Store st(db.schema);
    for (UserId uid : db.users) {
        std::string name;
        if (auto it = user_names.find(uid); it != user_names.end()) name = it->second;
        st.users.push_back({uid, std::move(name)});
    }

    // wid = state index: build_canonical already orders states by (depth, path).
    st.wids.clear();
    st.depth.clear();
    st.edges.clear();
    std::map<BeliefPath, Wid> by_path;
    for (std::size_t i = 0; i < k.state_paths.size(); ++i) {
        Wid w = static_cast<Wid>(i);
        st.wids.push_back(w);
        st.depth[w] = static_cast<int>(k.state_paths[i].depth());
        st.edges[w];
        by_path[k.state_paths[i]] = w;
    }
    st.next_wid = static_cast<Wid>(k.state_paths.size());
    for (const auto& [key, target] : k.edges)
        st.set_edge(static_cast<Wid>(key.first), key.second, static_cast<Wid>(target));

    std::set<BeliefPath> state_set(k.state_paths.begin(), k.state_paths.end());
    for (std::size_t i = 1; i < k.state_paths.size(); ++i)
        st.suffix[static_cast<Wid>(i)] = by_path.at(dss(k.state_paths[i].suffix_from(1), state_set));

    for (std::size_t i = 0; i < k.state_paths.size(); ++i) {
        Wid w = static_cast<Wid>(i);
        BeliefWorld explicit_part = explicit_world(db, k.state_paths[i]);
        auto emit = [&](const Tuple& t, Sign sign, bool is_explicit) {
            Tid tid = st.ensure_tid(t.relation, t.values);
            KeyId key = st.rstar.at(t.relation).rows.at(tid).key_id;
            st.v_insert(t.relation, w, key, {tid, sign, is_explicit});
        };
        const BeliefWorld& world = k.worlds[i];
        for (const Tuple& t : world.positive)
            emit(t, Sign::positive, explicit_part.positive.count(t) > 0);
        for (const Tuple& t : world.negative)
            emit(t, Sign::negative, explicit_part.negative.count(t) > 0);
    }
    return st;
}

// ---------------------------------------------------------------------------
// dump / load

namespace {

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\\': out += "\\\\"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape(const std::string& s, int line) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (i + 1 == s.size())
            throw std::runtime_error("line " + std::to_string(line) + ": trailing backslash");
        switch (s[++i]) {
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'r': out += '\r'; break;
            case '\\': out += '\\'; break;
            default:
                throw std::runtime_error("line " + std::to_string(line) + ": bad escape \\" +
                                         std::string(1, s[i]));
        }
    }
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string value_field(const Value& v) {
    return v.is_int() ? std::to_string(v.as_int()) : escape(v.as_text());
}

Value parse_value(const std::string& field, ValueType type, int line) {
    if (type == ValueType::text) return Value(unescape(field, line));
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return Value(v);
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line) + ": expected an integer, got '" +
                                 field + "'");
    }
}

std::int64_t parse_i64(const std::string& field, int line) {
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line) + ": expected an integer, got '" +
                                 field + "'");
    }
}

void write_sections(const Store& st, std::ostream& out, bool counters) {
    if (counters)
        out << "#counters\t" << st.next_wid << "\t" << st.next_tid << "\n";

    out << "## U\n";
    for (const UserRow& u : st.users) out << u.uid << "\t" << escape(u.name) << "\n";

    for (const auto& rel : st.schema.relations) {
        const RelationStar& star = st.rstar.at(rel.name);
        out << "## " << rel.name << "*\n";
        std::vector<Tid> tids;
        tids.reserve(star.rows.size());
        for (const auto& [tid, _] : star.rows) tids.push_back(tid);
        std::sort(tids.begin(), tids.end());
        for (Tid tid : tids) {
            out << tid;
            for (const Value& v : star.rows.at(tid).values) out << "\t" << value_field(v);
            out << "\n";
        }

        out << "## " << rel.name << "_V\n";
        std::vector<SortedVRowRef> rows = sorted_rows(st, rel.name);
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.wid != b.wid ? a.wid < b.wid : a.row.tid < b.row.tid;
        });
        for (const auto& r : rows)
            out << r.wid << "\t" << r.row.tid << "\t" << value_field(star.key_value(r.key)) << "\t"
                << sign_char(r.row.sign) << "\t" << (r.row.explicit_row ? 'y' : 'n') << "\n";
    }

    out << "## E\n";
    std::vector<Wid> sorted_wids = st.wids;
    std::sort(sorted_wids.begin(), sorted_wids.end());
    for (Wid w : sorted_wids) {
        auto it = st.edges.find(w);
        if (it == st.edges.end()) continue;
        for (const auto& [u, target] : it->second)
            out << w << "\t" << u << "\t" << target << "\n";
    }

    out << "## D\n";
    for (Wid w : sorted_wids) out << w << "\t" << st.depth.at(w) << "\n";

    out << "## S\n";
    for (Wid w : sorted_wids) {
        auto it = st.suffix.find(w);
        if (it != st.suffix.end()) out << w << "\t" << it->second << "\n";
    }
}

} // namespace

void dump(const Store& store, std::ostream& out) {
    out << "#beliefdb\t1\n";
    for (const auto& rel : store.schema.relations) {
        out << "#schema\trelation\t" << escape(rel.name);
        for (const auto& [att, type] : rel.attributes)
            out << "\t" << escape(att) << ":" << value_type_name(type);
        out << "\n";
    }
    write_sections(store, out, true);
}

Store load(std::istream& in) {
    Store st;
    std::string line;
    int lineno = 0;
    bool saw_magic = false;
    bool counters_seen = false;
    std::string section;

    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error("line " + std::to_string(lineno) + ": " + msg);
    };

    // Section decoding state.
    st.wids.clear();
    st.depth.clear();
    st.edges.clear();
    bool any_depth = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#' && line.rfind("##", 0) != 0) {
            auto fields = split_tabs(line);
            if (fields[0] == "#beliefdb") {
                saw_magic = true;
            } else if (fields[0] == "#schema") {
                if (fields.size() < 4 || fields[1] != "relation") throw fail("bad #schema line");
                RelationDef def;
                def.name = unescape(fields[2], lineno);
                for (std::size_t i = 3; i < fields.size(); ++i) {
                    std::size_t colon = fields[i].rfind(':');
                    if (colon == std::string::npos) throw fail("attribute needs name:type");
                    std::string type = fields[i].substr(colon + 1);
                    ValueType vt;
                    if (type == "int")
                        vt = ValueType::int64;
                    else if (type == "text")
                        vt = ValueType::text;
                    else
                        throw fail("unknown attribute type '" + type + "'");
                    def.attributes.push_back({unescape(fields[i].substr(0, colon), lineno), vt});
                }
                try {
                    st.add_relation(std::move(def));
                } catch (const std::exception& e) {
                    throw fail(e.what());
                }
            } else if (fields[0] == "#counters") {
                if (fields.size() != 3) throw fail("bad #counters line");
                st.next_wid = parse_i64(fields[1], lineno);
                st.next_tid = parse_i64(fields[2], lineno);
                counters_seen = true;
            } else {
                throw fail("unknown preamble line '" + fields[0] + "'");
            }
            continue;
        }
        if (line.rfind("## ", 0) == 0) {
            section = line.substr(3);
            continue;
        }
        if (!saw_magic) throw fail("missing #beliefdb header");
        if (section.empty()) throw fail("data row outside any section");

        auto fields = split_tabs(line);
        if (section == "U") {
            if (fields.size() != 2) throw fail("U rows have 2 columns");
            st.users.push_back({parse_i64(fields[0], lineno), unescape(fields[1], lineno)});
        } else if (section == "E") {
            if (fields.size() != 3) throw fail("E rows have 3 columns");
            st.set_edge(parse_i64(fields[0], lineno), parse_i64(fields[1], lineno),
                        parse_i64(fields[2], lineno));
        } else if (section == "D") {
            if (fields.size() != 2) throw fail("D rows have 2 columns");
            Wid w = parse_i64(fields[0], lineno);
            if (st.depth.count(w)) throw fail("duplicate depth row for world " + fields[0]);
            st.depth[w] = static_cast<int>(parse_i64(fields[1], lineno));
            st.wids.push_back(w);
            st.edges[w];
            any_depth = true;
        } else if (section == "S") {
            if (fields.size() != 2) throw fail("S rows have 2 columns");
            st.suffix[parse_i64(fields[0], lineno)] = parse_i64(fields[1], lineno);
        } else if (section.size() > 1 && section.back() == '*') {
            std::string rel = section.substr(0, section.size() - 1);
            const RelationDef* def = st.schema.find(rel);
            if (!def) throw fail("R* section for undeclared relation " + rel);
            if (fields.size() != def->arity() + 1)
                throw fail("R* rows of " + rel + " have " + std::to_string(def->arity() + 1) +
                           " columns");
            Tid tid = parse_i64(fields[0], lineno);
            std::vector<Value> values;
            for (std::size_t i = 0; i < def->arity(); ++i)
                values.push_back(parse_value(fields[i + 1], def->attributes[i].second, lineno));
            RelationStar& star = st.rstar.at(rel);
            if (star.rows.count(tid)) throw fail("duplicate tid " + fields[0]);
            if (star.tid_by_values.count(values)) throw fail("duplicate R* tuple content");
            KeyId key = star.intern_key(values.at(0));
            star.rows.emplace(tid, StarRow{std::move(values), key, 0});
            star.tid_by_values.emplace(star.rows.at(tid).values, tid);
        } else if (section.size() > 2 && section.rfind("_V") == section.size() - 2) {
            std::string rel = section.substr(0, section.size() - 2);
            const RelationDef* def = st.schema.find(rel);
            if (!def) throw fail("V section for undeclared relation " + rel);
            if (fields.size() != 5) throw fail("V rows have 5 columns");
            Wid w = parse_i64(fields[0], lineno);
            Tid tid = parse_i64(fields[1], lineno);
            Value key = parse_value(fields[2], def->attributes[0].second, lineno);
            Sign sign;
            if (fields[3] == "+")
                sign = Sign::positive;
            else if (fields[3] == "-")
                sign = Sign::negative;
            else
                throw fail("sign column must be + or -");
            bool expl;
            if (fields[4] == "y")
                expl = true;
            else if (fields[4] == "n")
                expl = false;
            else
                throw fail("explicit column must be y or n");
            RelationStar& star = st.rstar.at(rel);
            auto star_it = star.rows.find(tid);
            if (star_it == star.rows.end())
                throw fail("V row references missing tid " + std::to_string(tid));
            if (star_it->second.values.at(0) != key)
                throw fail("V key column disagrees with R* for tid " + std::to_string(tid));
            if (const KeySlot* s = st.slot(rel, w, star_it->second.key_id); s && s->find(tid))
                throw fail("duplicate V row for (wid " + std::to_string(w) + ", tid " +
                           std::to_string(tid) + ")");
            st.v_insert(rel, w, star_it->second.key_id, {tid, sign, expl});
        } else {
            throw fail("unknown section '" + section + "'");
        }
    }
    if (!saw_magic) throw std::runtime_error("line 1: not a beliefdb file");
    if (!counters_seen) throw std::runtime_error("missing #counters line");
    if (!any_depth) throw std::runtime_error("missing D section (no root world)");

    std::sort(st.wids.begin(), st.wids.end());
    std::sort(st.users.begin(), st.users.end(),
              [](const UserRow& a, const UserRow& b) { return a.uid < b.uid; });
    for (Wid w : st.wids)
        if (w >= st.next_wid) throw std::runtime_error("integrity: wid counter behind stored worlds");
    for (const auto& [name, star] : st.rstar)
        for (const auto& [tid, row] : star.rows)
            if (tid >= st.next_tid)
                throw std::runtime_error("integrity: tid counter behind stored tuples");
    try {
        st.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("integrity: ") + e.what());
    }
    return st;
}

std::string Store::canonical_dump() const {
    auto paths = reconstruct_paths();

    std::vector<Wid> order = wids;
    std::sort(order.begin(), order.end(), [&](Wid a, Wid b) {
        return PathDepthLess{}(paths.at(a), paths.at(b));
    });
    std::unordered_map<Wid, Wid> wid_map;
    for (std::size_t i = 0; i < order.size(); ++i) wid_map[order[i]] = static_cast<Wid>(i);

    // tids renumbered by first occurrence scanning worlds in canonical order.
    std::unordered_map<Tid, Tid> tid_map;
    Tid next = 1;
    for (Wid w : order) {
        for (const auto& rel : schema.relations) {
            auto rel_it = val.find(rel.name);
            if (rel_it == val.end()) continue;
            auto world_it = rel_it->second.by_world.find(w);
            if (world_it == rel_it->second.by_world.end()) continue;
            std::vector<SortedVRowRef> rows;
            for (const auto& [key, slot] : world_it->second)
                for (const VRow& row : slot.rows()) rows.push_back({w, key, row});
            const RelationStar& star = rstar.at(rel.name);
            std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
                const auto& va = star.rows.at(a.row.tid).values;
                const auto& vb = star.rows.at(b.row.tid).values;
                if (va != vb) return va < vb;
                return a.row.sign < b.row.sign;
            });
            for (const auto& r : rows)
                if (!tid_map.count(r.row.tid)) tid_map[r.row.tid] = next++;
        }
    }

    std::ostringstream out;
    for (const auto& rel : schema.relations) {
        out << "#schema\trelation\t" << escape(rel.name);
        for (const auto& [att, type] : rel.attributes)
            out << "\t" << escape(att) << ":" << value_type_name(type);
        out << "\n";
    }

    out << "## U\n";
    for (const UserRow& u : users) out << u.uid << "\t" << escape(u.name) << "\n";

    for (const auto& rel : schema.relations) {
        const RelationStar& star = rstar.at(rel.name);
        out << "## " << rel.name << "*\n";
        std::vector<std::pair<Tid, const StarRow*>> star_rows;
        for (const auto& [tid, row] : star.rows) {
            auto it = tid_map.find(tid);
            if (it == tid_map.end()) continue; // unreferenced rows never happen post-validate
            star_rows.push_back({it->second, &row});
        }
        std::sort(star_rows.begin(), star_rows.end());
        for (const auto& [tid, row] : star_rows) {
            out << tid;
            for (const Value& v : row->values) out << "\t" << value_field(v);
            out << "\n";
        }

        out << "## " << rel.name << "_V\n";
        std::vector<std::tuple<Wid, Tid, std::string>> lines;
        auto rel_it = val.find(rel.name);
        if (rel_it != val.end()) {
            for (const auto& [w, slots] : rel_it->second.by_world)
                for (const auto& [key, slot] : slots)
                    for (const VRow& row : slot.rows()) {
                        std::ostringstream ln;
                        ln << wid_map.at(w) << "\t" << tid_map.at(row.tid) << "\t"
                           << value_field(star.key_value(key)) << "\t" << sign_char(row.sign) << "\t"
                           << (row.explicit_row ? 'y' : 'n');
                        lines.push_back({wid_map.at(w), tid_map.at(row.tid), ln.str()});
                    }
        }
        std::sort(lines.begin(), lines.end());
        for (const auto& [w, t, text] : lines) out << text << "\n";
    }

    out << "## E\n";
    std::vector<std::tuple<Wid, UserId, Wid>> edge_rows;
    for (const auto& [w, list] : edges)
        for (const auto& [u, target] : list)
            edge_rows.push_back({wid_map.at(w), u, wid_map.at(target)});
    std::sort(edge_rows.begin(), edge_rows.end());
    for (const auto& [w, u, t] : edge_rows) out << w << "\t" << u << "\t" << t << "\n";

    out << "## D\n";
    for (std::size_t i = 0; i < order.size(); ++i)
        out << i << "\t" << depth.at(order[i]) << "\n";

    out << "## S\n";
    std::vector<std::pair<Wid, Wid>> suffix_rows;
    for (const auto& [w, target] : suffix) suffix_rows.push_back({wid_map.at(w), wid_map.at(target)});
    std::sort(suffix_rows.begin(), suffix_rows.end());
    for (const auto& [w, t] : suffix_rows) out << w << "\t" << t << "\n";

    return std::move(out).str();
}

} // namespace beliefdb
