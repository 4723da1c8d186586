#include "beliefdb/core.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace beliefdb {

int RelationDef::attribute_index(const std::string& att) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i].first == att) return static_cast<int>(i);
    return -1;
}

const RelationDef* Schema::find(const std::string& name) const {
    for (const auto& r : relations)
        if (r.name == name) return &r;
    return nullptr;
}

const RelationDef& Schema::require(const std::string& name) const {
    if (const RelationDef* r = find(name)) return *r;
    throw std::invalid_argument("unknown relation: " + name);
}

void Schema::add_relation(RelationDef def) {
    if (def.attributes.empty())
        throw std::invalid_argument("relation " + def.name + " needs at least the key attribute");
    if (find(def.name))
        throw std::invalid_argument("duplicate relation name: " + def.name);
    std::set<std::string> seen;
    for (const auto& [att, _] : def.attributes)
        if (!seen.insert(att).second)
            throw std::invalid_argument("duplicate attribute " + att + " in relation " + def.name);
    relations.push_back(std::move(def));
}

void check_tuple(const Schema& schema, const Tuple& t) {
    const RelationDef& rel = schema.require(t.relation);
    if (t.values.size() != rel.arity()) {
        std::ostringstream os;
        os << "relation " << rel.name << " expects " << rel.arity() << " values, got "
           << t.values.size();
        throw std::invalid_argument(os.str());
    }
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (t.values[i].type() != rel.attributes[i].second) {
            std::ostringstream os;
            os << "attribute " << rel.attributes[i].first << " of " << rel.name << " is "
               << value_type_name(rel.attributes[i].second) << ", got "
               << value_type_name(t.values[i].type());
            throw std::invalid_argument(os.str());
        }
    }
}

bool BeliefPath::well_formed() const {
    for (std::size_t i = 1; i < users.size(); ++i)
        if (users[i] == users[i - 1]) return false;
    return true;
}

BeliefPath BeliefPath::parent() const {
    if (users.empty()) throw std::logic_error("root path has no parent");
    return BeliefPath(std::vector<UserId>(users.begin(), users.end() - 1));
}

BeliefPath BeliefPath::suffix_from(std::size_t from) const {
    if (from > users.size()) throw std::logic_error("suffix start out of range");
    return BeliefPath(std::vector<UserId>(users.begin() + static_cast<std::ptrdiff_t>(from), users.end()));
}

BeliefPath BeliefPath::prepend(UserId u) const {
    std::vector<UserId> ids;
    ids.reserve(users.size() + 1);
    ids.push_back(u);
    ids.insert(ids.end(), users.begin(), users.end());
    return BeliefPath(std::move(ids));
}

BeliefPath BeliefPath::append(UserId u) const {
    std::vector<UserId> ids = users;
    ids.push_back(u);
    return BeliefPath(std::move(ids));
}

std::string BeliefPath::to_display() const {
    if (users.empty()) return "eps";
    std::string out;
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(users[i]);
    }
    return out;
}

std::string BeliefStatement::to_display() const {
    std::ostringstream os;
    os << "[" << path.to_display() << "] " << tuple.relation << "(";
    for (std::size_t i = 0; i < tuple.values.size(); ++i) {
        if (i) os << ",";
        os << tuple.values[i].to_display();
    }
    os << ")" << sign_char(sign);
    return os.str();
}

void BeliefDatabase::add(BeliefStatement s) {
    if (!is_valid_path(s.path.users, users))
        throw std::invalid_argument("invalid belief path: " + s.path.to_display());
    check_tuple(schema, s.tuple);
    if (!statements.insert(std::move(s)).second)
        throw std::invalid_argument("duplicate belief statement");
}

bool is_valid_path(const std::vector<UserId>& users, const std::set<UserId>& universe) {
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (!universe.count(users[i])) return false;
        if (i > 0 && users[i] == users[i - 1]) return false;
    }
    return true;
}

bool world_consistent(const BeliefWorld& w, const Schema& schema) {
    // Gamma_1: within each relation, positive keys are unique.
    std::set<std::pair<std::string, Value>> seen;
    for (const Tuple& t : w.positive) {
        check_tuple(schema, t);
        if (!seen.insert({t.relation, t.key()}).second) return false;
    }
    // Gamma_2: no tuple is both believed and disbelieved.
    for (const Tuple& t : w.negative) {
        check_tuple(schema, t);
        if (w.positive.count(t)) return false;
    }
    return true;
}

bool world_entails(const BeliefWorld& w, const Tuple& t, Sign s) {
    // Only defined on consistent worlds (Gamma_1 needs a schema-independent
    // check here: positives grouped by relation+key).
    {
        std::set<std::pair<std::string, Value>> seen;
        for (const Tuple& p : w.positive)
            if (!seen.insert({p.relation, p.key()}).second)
                throw std::invalid_argument("world_entails on an inconsistent world (key conflict)");
        for (const Tuple& n : w.negative)
            if (w.positive.count(n))
                throw std::invalid_argument("world_entails on an inconsistent world (sign conflict)");
    }
    if (s == Sign::positive) return w.positive.count(t) > 0;
    if (w.negative.count(t)) return true; // stated negative
    for (const Tuple& p : w.positive)     // unstated: a conflicting positive owns the key
        if (p.relation == t.relation && p.key() == t.key() && !(p == t)) return true;
    return false;
}

BeliefWorld override_union(const BeliefWorld& child_explicit, const BeliefWorld& parent_entailed,
                           const Schema& schema) {
    if (!world_consistent(child_explicit, schema))
        throw std::invalid_argument("override_union: inconsistent child world");
    if (!world_consistent(parent_entailed, schema))
        throw std::invalid_argument("override_union: inconsistent parent world");

    BeliefWorld out = child_explicit;
    std::set<std::pair<std::string, Value>> positive_keys;
    for (const Tuple& t : out.positive) positive_keys.insert({t.relation, t.key()});

    for (const Tuple& t : parent_entailed.positive) {
        if (out.negative.count(t)) continue;                       // blocked by explicit t^-
        if (positive_keys.count({t.relation, t.key()})) continue;  // key owned by an explicit positive
        out.positive.insert(t);
        positive_keys.insert({t.relation, t.key()});
    }
    for (const Tuple& t : parent_entailed.negative) {
        if (out.positive.count(t)) continue; // blocked by explicit t^+
        out.negative.insert(t);
    }
    return out;
}

BeliefWorld explicit_world(const BeliefDatabase& db, const BeliefPath& w) {
    if (!is_valid_path(w.users, db.users))
        throw std::invalid_argument("explicit_world: invalid belief path " + w.to_display());
    BeliefWorld out;
    for (const BeliefStatement& s : db.statements) {
        if (s.path != w) continue;
        (s.sign == Sign::positive ? out.positive : out.negative).insert(s.tuple);
    }
    return out;
}

bool db_consistent(const BeliefDatabase& db) {
    std::set<BeliefPath> paths;
    for (const BeliefStatement& s : db.statements) paths.insert(s.path);
    for (const BeliefPath& w : paths)
        if (!world_consistent(explicit_world(db, w), db.schema)) return false;
    return true;
}

} // namespace beliefdb
