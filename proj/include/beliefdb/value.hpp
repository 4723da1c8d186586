#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

namespace beliefdb {

enum class ValueType { int64, text };

// Typed constant; attribute domains are 64-bit integers and strings.
class Value {
public:
    Value() : rep_(std::string{}) {}
    Value(std::int64_t v) : rep_(v) {}
    Value(std::string v) : rep_(std::move(v)) {}
    Value(const char* v) : rep_(std::string(v)) {}

    ValueType type() const {
        return std::holds_alternative<std::int64_t>(rep_) ? ValueType::int64 : ValueType::text;
    }
    bool is_int() const { return type() == ValueType::int64; }
    std::int64_t as_int() const {
        if (!is_int()) throw std::runtime_error("value is not an integer");
        return std::get<std::int64_t>(rep_);
    }
    const std::string& as_text() const {
        if (is_int()) throw std::runtime_error("value is not a string");
        return std::get<std::string>(rep_);
    }

    // Display form: integers in decimal, strings verbatim.
    std::string to_display() const {
        return is_int() ? std::to_string(std::get<std::int64_t>(rep_)) : std::get<std::string>(rep_);
    }

    friend bool operator==(const Value& a, const Value& b) = default;
    friend std::strong_ordering operator<=>(const Value& a, const Value& b) {
        if (a.rep_.index() != b.rep_.index())
            return a.rep_.index() <=> b.rep_.index();
        if (a.is_int()) return std::get<std::int64_t>(a.rep_) <=> std::get<std::int64_t>(b.rep_);
        return std::get<std::string>(a.rep_).compare(std::get<std::string>(b.rep_)) <=> 0;
    }

private:
    std::variant<std::int64_t, std::string> rep_;
};

inline const char* value_type_name(ValueType t) {
    return t == ValueType::int64 ? "int" : "text";
}

} // namespace beliefdb
