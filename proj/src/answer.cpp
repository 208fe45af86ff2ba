#include "stepwise/answer.hpp"

#include "stepwise/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cctype>
#include <string>
#include <vector>

namespace stepwise {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

constexpr std::array<std::string_view, 6> kCurrencySymbols = {"$", "\xE2\x82\xAC" /* € */,
                                                              "\xC2\xA3" /* £ */, "\xC2\xA5" /* ¥ */,
                                                              "\xE2\x82\xB9" /* ₹ */, "USD"};

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) noexcept { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool strip_currency_prefix(std::string_view& s) noexcept {
    for (auto sym : kCurrencySymbols) {
        if (s.starts_with(sym)) {
            s.remove_prefix(sym.size());
            return true;
        }
    }
    return false;
}

std::string render(const cpp_rational& value) {
    cpp_int num = boost::multiprecision::numerator(value);
    cpp_int den = boost::multiprecision::denominator(value);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

struct Decimal {
    cpp_rational value;
    std::size_t consumed = 0;
};

// Reads `[+-]? (digits ('.' digits*)? | '.' digits)` from the front of `s`.
std::optional<Decimal> read_decimal(std::string_view s) {
    std::size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
        negative = s[i] == '-';
        ++i;
    }
    std::string digits;
    std::size_t int_digits = 0;
    while (i < s.size() && is_digit(s[i])) {
        digits.push_back(s[i++]);
        ++int_digits;
    }
    std::size_t frac_digits = 0;
    if (i < s.size() && s[i] == '.') {
        std::size_t j = i + 1;
        while (j < s.size() && is_digit(s[j])) {
            digits.push_back(s[j++]);
            ++frac_digits;
        }
        if (int_digits > 0 || frac_digits > 0) i = j;
    }
    if (int_digits == 0 && frac_digits == 0) return std::nullopt;

    // cpp_int reads a leading 0 as an octal prefix
    auto nonzero = digits.find_first_not_of('0');
    cpp_int num(nonzero == std::string::npos ? std::string("0") : digits.substr(nonzero));
    cpp_int den = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(frac_digits));
    if (negative) num = -num;
    return Decimal{cpp_rational(num, den), i};
}

std::optional<cpp_rational> parse_number(std::string_view s) {
    auto lhs = read_decimal(s);
    if (!lhs) return std::nullopt;
    std::string_view rest = s.substr(lhs->consumed);
    cpp_rational value = lhs->value;
    if (!rest.empty() && rest.front() == '/') {
        auto rhs = read_decimal(rest.substr(1));
        if (!rhs || rhs->value == 0) return std::nullopt;
        value /= rhs->value;
        rest = rest.substr(1 + rhs->consumed);
    }
    // Whatever follows the number must read as a unit suffix: no digits and
    // no glued-on operator.
    rest = trim(rest);
    if (!rest.empty()) {
        char first = rest.front();
        bool unit_start = is_alpha(first) || first == '%' || first == '.' ||
                          (static_cast<unsigned char>(first) >= 0x80) || first == ')';
        if (!unit_start) return std::nullopt;
        for (char c : rest) {
            if (is_digit(c)) return std::nullopt;
        }
    }
    return value;
}

// Number-like tokens in reading order: optional leading minus, digit groups
// with thousands commas, optional decimal part, optional "/digits".
std::vector<std::string> number_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        bool starts_int = is_digit(text[i]);
        bool starts_frac = text[i] == '.' && i + 1 < n && is_digit(text[i + 1]) &&
                           (i == 0 || !is_digit(text[i - 1]));
        if (!starts_int && !starts_frac) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        if (begin > 0 && text[begin - 1] == '-' &&
            (begin < 2 || !(is_digit(text[begin - 2]) || is_alpha(text[begin - 2])))) {
            --begin;
        }
        std::string token(text.substr(begin, i - begin));
        if (starts_int) {
            std::size_t run = 0;
            while (i < n && is_digit(text[i])) {
                token.push_back(text[i++]);
                ++run;
            }
            // thousands groups only directly after a 1-3 digit head
            while (run <= 3 && i + 3 < n && text[i] == ',' && is_digit(text[i + 1]) &&
                   is_digit(text[i + 2]) && is_digit(text[i + 3]) &&
                   (i + 4 >= n || !is_digit(text[i + 4]))) {
                token.append(text.substr(i + 1, 3));
                i += 4;
            }
        }
        if (i + 1 < n && text[i] == '.' && is_digit(text[i + 1])) {
            token.push_back('.');
            ++i;
            while (i < n && is_digit(text[i])) token.push_back(text[i++]);
        } else if (starts_frac) {
            token.push_back(text[i++]);
            while (i < n && is_digit(text[i])) token.push_back(text[i++]);
        }
        if (i + 1 < n && text[i] == '/' && is_digit(text[i + 1])) {
            std::size_t j = i + 1;
            std::string den;
            while (j < n && is_digit(text[j])) den.push_back(text[j++]);
            token.push_back('/');
            token += den;
            i = j;
        }
        out.push_back(std::move(token));
    }
    return out;
}

std::optional<NormalizedAnswer> last_normalizable(std::string_view text) {
    auto tokens = number_tokens(text);
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        try {
            return normalize_answer(*it);
        } catch (const Unparseable&) {
        }
    }
    return std::nullopt;
}

constexpr std::string_view kMarker = "####";
constexpr std::string_view kSummarizeHeader = "[ACTION: Summarize]";
constexpr std::string_view kHeaderPrefix = "\n[ACTION:";

} // namespace

bool NormalizedAnswer::is_integer() const noexcept {
    return canonical_.find('/') == std::string::npos;
}

NormalizedAnswer NormalizedAnswer::from_canonical(std::string_view canonical) {
    NormalizedAnswer parsed = normalize_answer(canonical);
    if (parsed.canonical() != canonical) {
        throw Unparseable("not a canonical answer: '" + std::string(canonical) + "'");
    }
    return parsed;
}

NormalizedAnswer normalize_answer(std::string_view raw) {
    std::string cleaned;
    cleaned.reserve(raw.size());
    for (char c : raw) {
        if (c != ',') cleaned.push_back(c);
    }
    std::string_view s = trim(cleaned);

    bool negative = false;
    for (bool progress = true; progress;) {
        progress = false;
        s = trim(s);
        if (strip_currency_prefix(s)) progress = true;
        if (!s.empty() && (s.front() == '-' || s.front() == '+') && !negative) {
            // a sign in front of a currency symbol: "-$5"
            std::string_view after = trim(s.substr(1));
            std::string_view probe = after;
            if (strip_currency_prefix(probe)) {
                negative = s.front() == '-';
                s = probe;
                progress = true;
            }
        }
    }
    while (!s.empty() && (s.back() == '.' || is_space(s.back()))) s.remove_suffix(1);

    auto value = parse_number(s);
    if (!value) throw Unparseable("cannot parse answer: '" + std::string(raw) + "'");
    if (negative) *value = -*value;
    return NormalizedAnswer(render(*value));
}

std::optional<NormalizedAnswer> try_extract_final_answer(std::string_view prediction) {
    if (auto pos = prediction.rfind(kMarker); pos != std::string_view::npos) {
        std::string_view line = prediction.substr(pos + kMarker.size());
        line = line.substr(0, line.find('\n'));
        try {
            return normalize_answer(line);
        } catch (const Unparseable&) {
        }
        if (auto tok = last_normalizable(line)) return tok;
    }

    std::string_view scope = prediction;
    if (auto pos = prediction.rfind(kSummarizeHeader);
        pos != std::string_view::npos && (pos == 0 || prediction[pos - 1] == '\n')) {
        scope = prediction.substr(pos + kSummarizeHeader.size());
        if (auto next = scope.find(kHeaderPrefix); next != std::string_view::npos) {
            scope = scope.substr(0, next);
        }
    }
    return last_normalizable(scope);
}

NormalizedAnswer extract_final_answer(std::string_view prediction) {
    auto answer = try_extract_final_answer(prediction);
    if (!answer) throw NoFinalAnswer("no final answer found in prediction");
    return *std::move(answer);
}

} // namespace stepwise
