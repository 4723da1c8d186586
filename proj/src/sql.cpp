#include "beliefdb/sql.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace beliefdb::sql {

namespace {

enum class Tok { identifier, string_lit, int_lit, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;  // identifier name / punct spelling / decoded string
    std::int64_t ival = 0;
    SourceSpan span;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;
    int col = 1;

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (text[pos + i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        pos += n;
    }

    SourceSpan here(std::size_t len) const { return {pos, pos + len, line, col}; }

    Token next() {
        while (pos < text.size()) {
            char c = text[pos];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                advance(1);
                continue;
            }
            if (c == '-' && pos + 1 < text.size() && text[pos + 1] == '-') { // line comment
                while (pos < text.size() && text[pos] != '\n') advance(1);
                continue;
            }
            break;
        }
        if (pos >= text.size()) return {Tok::end, "", 0, here(0)};

        char c = text[pos];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t len = 1;
            while (pos + len < text.size()) {
                char d = text[pos + len];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_')
                    ++len;
                else
                    break;
            }
            Token t{Tok::identifier, std::string(text.substr(pos, len)), 0, here(len)};
            advance(len);
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos + 1 < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos + 1])))) {
            std::size_t len = c == '-' ? 2 : 1;
            while (pos + len < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[pos + len])))
                ++len;
            Token t{Tok::int_lit, std::string(text.substr(pos, len)), 0, here(len)};
            t.ival = std::stoll(t.text);
            advance(len);
            return t;
        }
        if (c == '\'') {
            std::string decoded;
            std::size_t len = 1;
            while (true) {
                if (pos + len >= text.size())
                    throw ParseError("unterminated string literal", here(len), "closing '");
                char d = text[pos + len];
                if (d == '\'') {
                    if (pos + len + 1 < text.size() && text[pos + len + 1] == '\'') {
                        decoded += '\'';
                        len += 2;
                        continue;
                    }
                    ++len;
                    break;
                }
                decoded += d;
                ++len;
            }
            Token t{Tok::string_lit, std::move(decoded), 0, here(len)};
            advance(len);
            return t;
        }
        // punctuation, longest match first
        for (std::string_view p : {"<>", "!=", "<=", ">=", "=", "<", ">", ",", "(", ")", ".", ";"}) {
            if (text.substr(pos, p.size()) == p) {
                Token t{Tok::punct, std::string(p), 0, here(p.size())};
                advance(p.size());
                return t;
            }
        }
        throw ParseError(std::string("unexpected character '") + c + "'", here(1), "a token");
    }
};

struct Parser {
    std::vector<Token> tokens;
    std::size_t at = 0;

    explicit Parser(std::string_view text) {
        Lexer lx{text};
        while (true) {
            Token t = lx.next();
            bool end = t.kind == Tok::end;
            tokens.push_back(std::move(t));
            if (end) break;
        }
    }

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(at + ahead, tokens.size() - 1);
        return tokens[i];
    }
    const Token& take() {
        const Token& t = tokens[std::min(at, tokens.size() - 1)];
        if (at < tokens.size() - 1) ++at;
        return t;
    }
    bool at_end() const { return peek().kind == Tok::end; }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token& t = peek();
        std::string got = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
        std::ostringstream os;
        os << "line " << t.span.line << ":" << t.span.column << ": expected " << expected
           << ", found " << got;
        throw ParseError(os.str(), t.span, expected);
    }

    bool is_keyword(const std::string& kw, std::size_t ahead = 0) const {
        const Token& t = peek(ahead);
        return t.kind == Tok::identifier && lower(t.text) == kw;
    }
    bool accept_keyword(const std::string& kw) {
        if (!is_keyword(kw)) return false;
        take();
        return true;
    }
    void expect_keyword(const std::string& kw) {
        if (!accept_keyword(kw)) fail("'" + kw + "'");
    }
    bool accept_punct(const std::string& p) {
        if (peek().kind == Tok::punct && peek().text == p) {
            take();
            return true;
        }
        return false;
    }
    void expect_punct(const std::string& p) {
        if (!accept_punct(p)) fail("'" + p + "'");
    }

    static const std::set<std::string>& keywords() {
        static const std::set<std::string> kw{"select", "from",   "where",  "insert", "into",
                                              "values", "delete", "update", "set",    "belief",
                                              "not",    "and",    "as",     "create", "relation",
                                              "adduser"};
        return kw;
    }

    std::string expect_identifier(const std::string& what) {
        const Token& t = peek();
        if (t.kind != Tok::identifier || keywords().count(lower(t.text))) fail(what);
        return take().text;
    }

    ColumnRef parse_column_ref() {
        SourceSpan start = peek().span;
        std::string first = expect_identifier("a column reference");
        ColumnRef ref;
        ref.span = start;
        if (accept_punct(".")) {
            ref.alias = first;
            ref.column = expect_identifier("an attribute name");
        } else {
            ref.column = first;
        }
        ref.span.end = peek().span.begin;
        return ref;
    }

    Literal parse_literal() {
        const Token& t = peek();
        if (t.kind == Tok::string_lit) {
            Token tok = take();
            return {Value(tok.text), tok.span};
        }
        if (t.kind == Tok::int_lit) {
            Token tok = take();
            return {Value(tok.ival), tok.span};
        }
        fail("a literal");
    }

    Operand parse_operand() {
        const Token& t = peek();
        if (t.kind == Tok::string_lit || t.kind == Tok::int_lit) return parse_literal();
        return parse_column_ref();
    }

    CompareOp parse_compare_op() {
        const Token& t = peek();
        if (t.kind == Tok::punct) {
            if (t.text == "=") return take(), CompareOp::eq;
            if (t.text == "<>" || t.text == "!=") return take(), CompareOp::ne;
            if (t.text == "<") return take(), CompareOp::lt;
            if (t.text == ">") return take(), CompareOp::gt;
            if (t.text == "<=") return take(), CompareOp::le;
            if (t.text == ">=") return take(), CompareOp::ge;
        }
        fail("a comparison operator");
    }

    std::vector<SqlComparison> parse_conditions() {
        std::vector<SqlComparison> out;
        do {
            SqlComparison c;
            c.span = peek().span;
            c.lhs = parse_operand();
            c.op = parse_compare_op();
            c.rhs = parse_operand();
            c.span.end = peek().span.begin;
            out.push_back(std::move(c));
        } while (accept_keyword("and"));
        return out;
    }

    std::optional<BeliefPrefix> parse_belief_prefix() {
        if (!is_keyword("belief")) return std::nullopt;
        BeliefPrefix prefix;
        while (accept_keyword("belief")) {
            UserRef u;
            u.span = peek().span;
            if (peek().kind == Tok::string_lit) {
                u.ref = take().text;
            } else {
                u.ref = parse_column_ref();
            }
            prefix.users.push_back(std::move(u));
        }
        prefix.negated = accept_keyword("not");
        return prefix;
    }

    FromItem parse_from_item() {
        FromItem item;
        item.span = peek().span;
        item.prefix = parse_belief_prefix();
        item.relation = expect_identifier("a relation name");
        if (accept_keyword("as")) {
            item.alias = expect_identifier("an alias");
        } else if (peek().kind == Tok::identifier && !keywords().count(lower(peek().text))) {
            item.alias = take().text;
        }
        item.span.end = peek().span.begin;
        return item;
    }

    SelectStmt parse_select() {
        expect_keyword("select");
        SelectStmt s;
        do {
            s.select_list.push_back(parse_column_ref());
        } while (accept_punct(","));
        expect_keyword("from");
        do {
            s.from.push_back(parse_from_item());
        } while (accept_punct(","));
        if (accept_keyword("where")) s.where = parse_conditions();
        return s;
    }

    InsertStmt parse_insert() {
        InsertStmt s;
        s.span = peek().span;
        expect_keyword("insert");
        expect_keyword("into");
        s.prefix = parse_belief_prefix();
        s.relation = expect_identifier("a relation name");
        expect_keyword("values");
        expect_punct("(");
        do {
            s.values.push_back(parse_literal());
        } while (accept_punct(","));
        expect_punct(")");
        return s;
    }

    DeleteStmt parse_delete() {
        DeleteStmt s;
        s.span = peek().span;
        expect_keyword("delete");
        expect_keyword("from");
        s.prefix = parse_belief_prefix();
        s.relation = expect_identifier("a relation name");
        if (accept_keyword("where")) s.where = parse_conditions();
        return s;
    }

    UpdateStmt parse_update() {
        UpdateStmt s;
        s.span = peek().span;
        expect_keyword("update");
        s.prefix = parse_belief_prefix();
        s.relation = expect_identifier("a relation name");
        expect_keyword("set");
        do {
            ColumnRef col = parse_column_ref();
            expect_punct("=");
            Literal value = parse_literal();
            s.assignments.push_back({std::move(col), std::move(value)});
        } while (accept_punct(","));
        if (accept_keyword("where")) s.where = parse_conditions();
        return s;
    }

    CreateRelationStmt parse_create() {
        CreateRelationStmt s;
        s.span = peek().span;
        expect_keyword("create");
        expect_keyword("relation");
        s.name = expect_identifier("a relation name");
        expect_punct("(");
        do {
            std::string att = expect_identifier("an attribute name");
            const Token& t = peek();
            if (t.kind != Tok::identifier) fail("an attribute type");
            std::string type = lower(take().text);
            ValueType vt;
            if (type == "text" || type == "string")
                vt = ValueType::text;
            else if (type == "int")
                vt = ValueType::int64;
            else
                fail("'text' or 'int'");
            s.attributes.push_back({std::move(att), vt});
        } while (accept_punct(","));
        expect_punct(")");
        return s;
    }

    AddUserStmt parse_adduser() {
        AddUserStmt s;
        s.span = peek().span;
        expect_keyword("adduser");
        if (peek().kind != Tok::string_lit) fail("a quoted user name");
        s.name = take().text;
        return s;
    }

    Statement parse_one() {
        if (is_keyword("select")) return parse_select();
        if (is_keyword("insert")) return parse_insert();
        if (is_keyword("delete")) return parse_delete();
        if (is_keyword("update")) return parse_update();
        if (is_keyword("create")) return parse_create();
        if (is_keyword("adduser")) return parse_adduser();
        fail("'select', 'insert', 'delete', 'update', 'create' or 'adduser'");
    }
};

} // namespace

Statement parse_statement(std::string_view text) {
    Parser p(text);
    Statement s = p.parse_one();
    p.accept_punct(";");
    if (!p.at_end()) p.fail("end of statement");
    return s;
}

std::vector<Statement> parse_script(std::string_view text) {
    Parser p(text);
    std::vector<Statement> out;
    while (!p.at_end()) {
        if (p.accept_punct(";")) continue;
        out.push_back(p.parse_one());
        if (!p.at_end()) p.expect_punct(";");
    }
    return out;
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        out += c;
        if (c == '\'') out += '\'';
    }
    out += "'";
    return out;
}

std::string print_literal(const Literal& l) {
    return l.value.is_int() ? l.value.to_display() : quote(l.value.as_text());
}

std::string print_column(const ColumnRef& c) {
    return c.alias.empty() ? c.column : c.alias + "." + c.column;
}

std::string print_operand(const Operand& o) {
    if (const ColumnRef* c = std::get_if<ColumnRef>(&o)) return print_column(*c);
    return print_literal(std::get<Literal>(o));
}

std::string print_conditions(const std::vector<SqlComparison>& where) {
    std::string out;
    for (std::size_t i = 0; i < where.size(); ++i) {
        out += i ? " and " : " where ";
        out += print_operand(where[i].lhs);
        out += " ";
        out += compare_op_text(where[i].op);
        out += " ";
        out += print_operand(where[i].rhs);
    }
    return out;
}

std::string print_prefix(const std::optional<BeliefPrefix>& prefix) {
    if (!prefix) return "";
    std::string out;
    for (const UserRef& u : prefix->users) {
        out += "BELIEF ";
        if (const std::string* name = std::get_if<std::string>(&u.ref))
            out += quote(*name);
        else
            out += print_column(std::get<ColumnRef>(u.ref));
        out += " ";
    }
    if (prefix->negated) out += "not ";
    return out;
}

} // namespace

std::string print_statement(const Statement& stmt) {
    std::ostringstream os;
    if (const SelectStmt* s = std::get_if<SelectStmt>(&stmt)) {
        os << "select ";
        for (std::size_t i = 0; i < s->select_list.size(); ++i)
            os << (i ? ", " : "") << print_column(s->select_list[i]);
        os << " from ";
        for (std::size_t i = 0; i < s->from.size(); ++i) {
            const FromItem& f = s->from[i];
            os << (i ? ", " : "") << print_prefix(f.prefix) << f.relation;
            if (!f.alias.empty()) os << " as " << f.alias;
        }
        os << print_conditions(s->where);
    } else if (const InsertStmt* s = std::get_if<InsertStmt>(&stmt)) {
        os << "insert into " << print_prefix(s->prefix) << s->relation << " values (";
        for (std::size_t i = 0; i < s->values.size(); ++i)
            os << (i ? ", " : "") << print_literal(s->values[i]);
        os << ")";
    } else if (const DeleteStmt* s = std::get_if<DeleteStmt>(&stmt)) {
        os << "delete from " << print_prefix(s->prefix) << s->relation << print_conditions(s->where);
    } else if (const UpdateStmt* s = std::get_if<UpdateStmt>(&stmt)) {
        os << "update " << print_prefix(s->prefix) << s->relation << " set ";
        for (std::size_t i = 0; i < s->assignments.size(); ++i)
            os << (i ? ", " : "") << print_column(s->assignments[i].first) << " = "
               << print_literal(s->assignments[i].second);
        os << print_conditions(s->where);
    } else if (const CreateRelationStmt* s = std::get_if<CreateRelationStmt>(&stmt)) {
        os << "create relation " << s->name << " (";
        for (std::size_t i = 0; i < s->attributes.size(); ++i)
            os << (i ? ", " : "") << s->attributes[i].first << " "
               << (s->attributes[i].second == ValueType::text ? "text" : "int");
        os << ")";
    } else if (const AddUserStmt* s = std::get_if<AddUserStmt>(&stmt)) {
        os << "adduser " << quote(s->name);
    }
    return std::move(os).str();
}

// ---------------------------------------------------------------------------
// lowering

namespace {

[[noreturn]] void lower_fail(const SourceSpan& span, const std::string& msg) {
    std::ostringstream os;
    os << "line " << span.line << ":" << span.column << ": " << msg;
    throw ParseError(os.str(), span, "");
}

UserId resolve_user(const std::vector<UserRow>& users, const std::string& name,
                    const SourceSpan& span) {
    for (const UserRow& u : users)
        if (u.name == name) return u.uid;
    lower_fail(span, "unknown user '" + name + "'");
}

// Union-find over lowered variable names, with an optional pinned constant
// per class discovered through literal equalities.
struct VarClasses {
    std::map<std::string, std::string> parent;
    std::map<std::string, Value> pinned;
    std::map<std::string, SourceSpan> pin_spans;

    void declare(const std::string& v) { parent.emplace(v, v); }
    std::string find(const std::string& v) {
        std::string r = v;
        while (parent.at(r) != r) r = parent.at(r);
        return r;
    }
    void unite(const std::string& a, const std::string& b) {
        std::string ra = find(a), rb = find(b);
        if (ra == rb) return;
        if (pinned.count(rb) && !pinned.count(ra)) std::swap(ra, rb);
        parent[rb] = ra;
        if (auto it = pinned.find(rb); it != pinned.end()) {
            if (!pinned.count(ra)) {
                pinned.emplace(ra, it->second);
                pin_spans.emplace(ra, pin_spans.at(rb));
            }
        }
    }
    void pin(const std::string& v, Value c, SourceSpan span) {
        std::string r = find(v);
        pinned.emplace(r, std::move(c)); // a second pin is kept as a predicate by the caller
        pin_spans.emplace(r, span);
    }
};

struct AliasInfo {
    bool is_users = false;
    const RelationDef* rel = nullptr;
    std::string var_prefix;
};

const std::string kUsersRelation = "Users";

} // namespace

Bcq lower_select(const SelectStmt& stmt, const Schema& schema, const std::vector<UserRow>& users) {
    std::map<std::string, AliasInfo> aliases;
    std::vector<std::pair<std::string, const FromItem*>> content_items;

    for (const FromItem& item : stmt.from) {
        std::string alias = item.alias.empty() ? item.relation : item.alias;
        if (aliases.count(alias)) lower_fail(item.span, "duplicate alias '" + alias + "'");
        AliasInfo info;
        if (item.relation == kUsersRelation) {
            if (item.prefix) lower_fail(item.span, "the Users relation takes no belief prefix");
            info.is_users = true;
        } else {
            const RelationDef* rel = schema.find(item.relation);
            if (!rel) lower_fail(item.span, "unknown relation '" + item.relation + "'");
            info.rel = rel;
            content_items.push_back({alias, &item});
        }
        info.var_prefix = alias;
        aliases.emplace(alias, std::move(info));
    }

    VarClasses classes;
    auto user_var = [&](const std::string& alias) { return alias + "$uid"; };
    auto att_var = [&](const std::string& alias, const std::string& att) {
        return alias + "$" + att;
    };
    for (const auto& [alias, info] : aliases) {
        if (info.is_users) {
            classes.declare(user_var(alias));
        } else {
            for (const auto& [att, _] : info.rel->attributes) classes.declare(att_var(alias, att));
        }
    }

    struct ResolvedCol {
        std::string var;
        bool is_user_name = false; // Users alias .name column
        ValueType type = ValueType::text;
    };
    auto resolve_col = [&](const ColumnRef& c) -> ResolvedCol {
        std::vector<std::pair<std::string, const AliasInfo*>> hits;
        for (const auto& [alias, info] : aliases) {
            if (!c.alias.empty() && c.alias != alias) continue;
            if (info.is_users) {
                if (c.column == "uid" || c.column == "name") hits.push_back({alias, &info});
            } else if (info.rel->attribute_index(c.column) >= 0) {
                hits.push_back({alias, &info});
            }
        }
        if (hits.empty()) lower_fail(c.span, "unresolved column '" + print_column(c) + "'");
        if (hits.size() > 1) lower_fail(c.span, "ambiguous column '" + print_column(c) + "'");
        const auto& [alias, info] = hits.front();
        if (info->is_users)
            return {user_var(alias), c.column == "name", ValueType::int64};
        int idx = info->rel->attribute_index(c.column);
        return {att_var(alias, c.column), false,
                info->rel->attributes[static_cast<std::size_t>(idx)].second};
    };

    // Pass 1 over the where clause: '=' between columns unifies, '=' against a
    // literal pins the class; everything else becomes an arithmetic predicate.
    struct PendingCmp {
        ResolvedCol lhs;
        std::optional<ResolvedCol> rhs_col;
        Value rhs_const;
        CompareOp op;
        SourceSpan span;
    };
    std::vector<PendingCmp> pending;

    for (const SqlComparison& cmp : stmt.where) {
        const ColumnRef* lc = std::get_if<ColumnRef>(&cmp.lhs);
        const ColumnRef* rc = std::get_if<ColumnRef>(&cmp.rhs);
        if (!lc && !rc) lower_fail(cmp.span, "comparison between two literals");
        // Normalize: column on the left.
        ColumnRef left = lc ? *lc : *rc;
        Operand right = lc ? cmp.rhs : cmp.lhs;
        CompareOp op = cmp.op;
        if (!lc) { // mirror the operator
            switch (op) {
                case CompareOp::lt: op = CompareOp::gt; break;
                case CompareOp::gt: op = CompareOp::lt; break;
                case CompareOp::le: op = CompareOp::ge; break;
                case CompareOp::ge: op = CompareOp::le; break;
                default: break;
            }
        }
        ResolvedCol l = resolve_col(left);
        if (const ColumnRef* r2 = std::get_if<ColumnRef>(&right)) {
            ResolvedCol r = resolve_col(*r2);
            if (l.is_user_name != r.is_user_name)
                lower_fail(cmp.span, "cannot compare a user name with a non-name column");
            if (op == CompareOp::eq) {
                classes.unite(l.var, r.var);
            } else {
                pending.push_back({l, r, Value{}, op, cmp.span});
            }
            continue;
        }
        const Literal& lit = std::get<Literal>(right);
        if (l.is_user_name) {
            if (op != CompareOp::eq)
                lower_fail(cmp.span, "user names support equality comparisons only");
            if (lit.value.is_int()) lower_fail(lit.span, "user names are quoted strings");
            UserId uid = resolve_user(users, lit.value.as_text(), lit.span);
            if (classes.pinned.count(classes.find(l.var)))
                pending.push_back({l, std::nullopt, Value(uid), CompareOp::eq, cmp.span});
            else
                classes.pin(l.var, Value(uid), cmp.span);
            continue;
        }
        if (lit.value.type() != l.type) lower_fail(lit.span, "literal type does not match the column");
        if (op == CompareOp::eq) {
            if (classes.pinned.count(classes.find(l.var)))
                pending.push_back({l, std::nullopt, lit.value, CompareOp::eq, cmp.span});
            else
                classes.pin(l.var, lit.value, cmp.span);
        } else {
            pending.push_back({l, std::nullopt, lit.value, op, cmp.span});
        }
    }

    // Head variables stay variables; their pins turn into predicates instead.
    std::set<std::string> head_classes;
    for (const ColumnRef& c : stmt.select_list) head_classes.insert(classes.find(resolve_col(c).var));

    Bcq q;
    auto term_of = [&](const std::string& var) -> Term {
        std::string rep = classes.find(var);
        auto it = classes.pinned.find(rep);
        if (it != classes.pinned.end() && !head_classes.count(rep)) return it->second;
        return VarRef{rep};
    };
    auto path_term_of = [&](const std::string& var, const SourceSpan& span) -> PathTerm {
        std::string rep = classes.find(var);
        auto it = classes.pinned.find(rep);
        if (it != classes.pinned.end() && !head_classes.count(rep)) {
            if (!it->second.is_int()) lower_fail(span, "belief path bound to a non-user value");
            return it->second.as_int();
        }
        return VarRef{rep};
    };

    for (const auto& [alias, item] : content_items) {
        const AliasInfo& info = aliases.at(alias);
        Subgoal g;
        g.relation = info.rel->name;
        if (item->prefix) {
            g.sign = item->prefix->negated ? Sign::negative : Sign::positive;
            for (const UserRef& u : item->prefix->users) {
                if (const std::string* name = std::get_if<std::string>(&u.ref)) {
                    g.path.push_back(resolve_user(users, *name, u.span));
                    continue;
                }
                const ColumnRef& ref = std::get<ColumnRef>(u.ref);
                ResolvedCol col = resolve_col(ref);
                bool users_uid = false;
                if (!ref.alias.empty()) {
                    auto ai = aliases.find(ref.alias);
                    users_uid = ai != aliases.end() && ai->second.is_users && ref.column == "uid";
                }
                if (!users_uid)
                    lower_fail(u.span, "belief prefixes reference Users aliases (e.g. U.uid)");
                g.path.push_back(path_term_of(col.var, u.span));
            }
        }
        for (const auto& [att, _] : info.rel->attributes)
            g.args.push_back(term_of(att_var(alias, att)));
        q.subgoals.push_back(std::move(g));
    }

    for (const ColumnRef& c : stmt.select_list) {
        ResolvedCol col = resolve_col(c);
        q.head.push_back({classes.find(col.var), col.is_user_name});
    }

    for (const PendingCmp& p : pending) {
        Comparison c;
        c.lhs = term_of(p.lhs.var);
        c.op = p.op;
        c.rhs = p.rhs_col ? term_of(p.rhs_col->var) : Term(p.rhs_const);
        q.arithmetic.push_back(std::move(c));
    }
    // Pins on head classes become explicit equality predicates.
    for (const auto& [rep, value] : classes.pinned) {
        if (!head_classes.count(rep)) continue;
        q.arithmetic.push_back({VarRef{rep}, CompareOp::eq, value});
    }

    if (!check_safety(q))
        throw ParseError("query is unsafe: every variable must appear in a belief path or a "
                         "positive subgoal",
                         SourceSpan{}, "");
    return q;
}

namespace {

BeliefPath lower_prefix_path(const std::optional<BeliefPrefix>& prefix,
                             const std::vector<UserRow>& users) {
    BeliefPath path;
    if (!prefix) return path;
    for (const UserRef& u : prefix->users) {
        const std::string* name = std::get_if<std::string>(&u.ref);
        if (!name) lower_fail(u.span, "DML belief prefixes take quoted user names only");
        path.users.push_back(resolve_user(users, *name, u.span));
    }
    if (!path.well_formed()) lower_fail(prefix->users.front().span, "belief path repeats a user");
    return path;
}

std::vector<MatchCondition> lower_match(const std::vector<SqlComparison>& where,
                                        const RelationDef& rel, const std::string& relation) {
    std::vector<MatchCondition> out;
    for (const SqlComparison& cmp : where) {
        const ColumnRef* lc = std::get_if<ColumnRef>(&cmp.lhs);
        if (!lc) lower_fail(cmp.span, "DML conditions start with a column");
        if (!lc->alias.empty() && lc->alias != relation)
            lower_fail(lc->span, "DML conditions reference the target relation only");
        int idx = rel.attribute_index(lc->column);
        if (idx < 0) lower_fail(lc->span, "unknown column '" + lc->column + "'");
        MatchCondition m;
        m.column = idx;
        m.op = cmp.op;
        if (const ColumnRef* rc = std::get_if<ColumnRef>(&cmp.rhs)) {
            if (!rc->alias.empty() && rc->alias != relation)
                lower_fail(rc->span, "DML conditions reference the target relation only");
            int ridx = rel.attribute_index(rc->column);
            if (ridx < 0) lower_fail(rc->span, "unknown column '" + rc->column + "'");
            m.rhs = ridx;
        } else {
            const Literal& lit = std::get<Literal>(cmp.rhs);
            if (lit.value.type() != rel.attributes[static_cast<std::size_t>(idx)].second)
                lower_fail(lit.span, "literal type does not match the column");
            m.rhs = lit.value;
        }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace

DmlOp lower_dml(const Statement& stmt, const Schema& schema, const std::vector<UserRow>& users) {
    if (const InsertStmt* s = std::get_if<InsertStmt>(&stmt)) {
        const RelationDef* rel = schema.find(s->relation);
        if (!rel) lower_fail(s->span, "unknown relation '" + s->relation + "'");
        if (s->values.size() != rel->arity())
            lower_fail(s->span, "relation " + s->relation + " expects " +
                                    std::to_string(rel->arity()) + " values, got " +
                                    std::to_string(s->values.size()));
        InsertOp op;
        op.path = lower_prefix_path(s->prefix, users);
        op.sign = s->prefix && s->prefix->negated ? Sign::negative : Sign::positive;
        op.tuple.relation = rel->name;
        for (std::size_t i = 0; i < s->values.size(); ++i) {
            const Literal& lit = s->values[i];
            if (lit.value.type() != rel->attributes[i].second)
                lower_fail(lit.span, "value " + std::to_string(i + 1) + " does not match attribute " +
                                         rel->attributes[i].first);
            op.tuple.values.push_back(lit.value);
        }
        return op;
    }
    if (const DeleteStmt* s = std::get_if<DeleteStmt>(&stmt)) {
        const RelationDef* rel = schema.find(s->relation);
        if (!rel) lower_fail(s->span, "unknown relation '" + s->relation + "'");
        DeleteOp op;
        op.path = lower_prefix_path(s->prefix, users);
        op.sign = s->prefix && s->prefix->negated ? Sign::negative : Sign::positive;
        op.relation = rel->name;
        op.where = lower_match(s->where, *rel, s->relation);
        return op;
    }
    if (const UpdateStmt* s = std::get_if<UpdateStmt>(&stmt)) {
        const RelationDef* rel = schema.find(s->relation);
        if (!rel) lower_fail(s->span, "unknown relation '" + s->relation + "'");
        UpdateOp op;
        op.path = lower_prefix_path(s->prefix, users);
        op.sign = s->prefix && s->prefix->negated ? Sign::negative : Sign::positive;
        op.relation = rel->name;
        for (const auto& [col, lit] : s->assignments) {
            int idx = rel->attribute_index(col.column);
            if (idx < 0) lower_fail(col.span, "unknown column '" + col.column + "'");
            if (lit.value.type() != rel->attributes[static_cast<std::size_t>(idx)].second)
                lower_fail(lit.span, "literal type does not match the column");
            op.assignments.push_back({idx, lit.value});
        }
        op.where = lower_match(s->where, *rel, s->relation);
        return op;
    }
    throw std::invalid_argument("lower_dml expects an insert, delete or update statement");
}

} // namespace beliefdb::sql
