#include "anchorkb/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace anchorkb {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower_byte(char c) {
    if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
    return c;
}

std::optional<int> parse_int_field(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

bool valid_civil(const CivilDate& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static constexpr int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_day = lengths[d.month - 1];
    bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    if (d.month == 2 && leap) max_day = 29;
    return d.day <= max_day;
}

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower_byte);
    return out;
}

std::string trim(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (is_word_byte(static_cast<unsigned char>(c))) {
            current.push_back(lower_byte(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

const std::array<std::string_view, 35>& stopwords() {
    static const std::array<std::string_view, 35> words = {
        "a",    "an",   "the",  "and",  "or",   "but",  "is",
        "are",  "was",  "were", "be",   "been", "being", "am",
        "to",   "of",   "in",   "at",   "on",   "for",  "with",
        "from", "by",   "about", "i",   "you",  "he",   "she",
        "it",   "we",   "they", "them", "this", "that", "did",
    };
    return words;
}

bool is_stopword(std::string_view token) {
    const auto& words = stopwords();
    return std::find(words.begin(), words.end(), token) != words.end();
}

std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(s)) {
        if (!is_stopword(tok)) out.push_back(std::move(tok));
    }
    return out;
}

std::set<std::string> token_set(std::string_view s) {
    auto toks = tokenize(s);
    return {toks.begin(), toks.end()};
}

std::set<std::string> content_word_set(std::string_view s) {
    auto toks = content_words(s);
    return {toks.begin(), toks.end()};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    size_t intersection = 0;
    for (const auto& item : a) {
        if (b.count(item)) ++intersection;
    }
    size_t unions = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::int64_t days_from_civil(const CivilDate& d) {
    // Howard Hinnant's algorithm, public domain.
    std::int64_t y = d.year;
    y -= d.month <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (month <= 2)), static_cast<int>(month),
                     static_cast<int>(day)};
}

int day_of_week(const CivilDate& d) {
    std::int64_t days = days_from_civil(d);
    // 1970-01-01 was a Thursday (4).
    return static_cast<int>(((days % 7) + 11) % 7);
}

std::string_view weekday_name(const CivilDate& d) {
    static constexpr std::string_view names[7] = {
        "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
    return names[day_of_week(d)];
}

std::optional<int> parse_month_name(std::string_view word) {
    static constexpr std::string_view full[12] = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    std::string lower = to_lower(word);
    for (int i = 0; i < 12; ++i) {
        if (lower == full[i] || (lower.size() == 3 && full[i].substr(0, 3) == lower)) {
            return i + 1;
        }
    }
    return std::nullopt;
}

namespace {

// Splits "token token token" on spaces and commas, dropping empties.
std::vector<std::string> split_date_words(std::string_view s) {
    std::vector<std::string> words;
    std::string current;
    for (char c : s) {
        if (c == ' ' || c == ',' || c == '\t') {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::optional<CivilDate> parse_numeric_date(std::string_view s, char sep) {
    size_t p1 = s.find(sep);
    if (p1 == std::string_view::npos) return std::nullopt;
    size_t p2 = s.find(sep, p1 + 1);
    if (p2 == std::string_view::npos) return std::nullopt;
    auto y = parse_int_field(s.substr(0, p1));
    auto m = parse_int_field(s.substr(p1 + 1, p2 - p1 - 1));
    auto d = parse_int_field(s.substr(p2 + 1));
    if (!y || !m || !d) return std::nullopt;
    CivilDate date{*y, *m, *d};
    if (!valid_civil(date)) return std::nullopt;
    return date;
}

}  // namespace

std::optional<CivilDate> parse_date(std::string_view s) {
    std::string text = trim(s);
    if (text.empty()) return std::nullopt;

    // Cut an optional time-of-day portion: "2023-06-02 10:15" or ISO 'T'.
    size_t t_pos = text.find('T');
    if (t_pos != std::string::npos) text = text.substr(0, t_pos);
    size_t colon = text.find(':');
    if (colon != std::string::npos) {
        size_t space = text.rfind(' ', colon);
        if (space != std::string::npos) text = trim(std::string_view(text).substr(0, space));
    }

    if (auto d = parse_numeric_date(text, '-')) return d;
    if (auto d = parse_numeric_date(text, '/')) return d;

    auto words = split_date_words(text);
    if (words.size() == 3) {
        // "May 1 2022"
        if (auto month = parse_month_name(words[0])) {
            auto day = parse_int_field(words[1]);
            auto year = parse_int_field(words[2]);
            if (day && year) {
                CivilDate date{*year, *month, *day};
                if (valid_civil(date)) return date;
            }
        }
        // "1 May 2022"
        if (auto month = parse_month_name(words[1])) {
            auto day = parse_int_field(words[0]);
            auto year = parse_int_field(words[2]);
            if (day && year) {
                CivilDate date{*year, *month, *day};
                if (valid_civil(date)) return date;
            }
        }
    }
    return std::nullopt;
}

std::optional<std::int64_t> parse_timestamp_seconds(std::string_view s) {
    auto date = parse_date(s);
    if (!date) return std::nullopt;
    std::int64_t seconds = days_from_civil(*date) * 86400;

    std::string text = trim(s);
    size_t colon = text.find(':');
    if (colon != std::string::npos && colon >= 2) {
        size_t start = colon - 2;
        while (start > 0 && std::isdigit(static_cast<unsigned char>(text[start - 1]))) --start;
        auto hour = parse_int_field(std::string_view(text).substr(start, colon - start));
        auto minute = parse_int_field(std::string_view(text).substr(colon + 1, 2));
        if (hour && minute && *hour >= 0 && *hour < 24 && *minute >= 0 && *minute < 60) {
            seconds += static_cast<std::int64_t>(*hour) * 3600 + *minute * 60;
            size_t after = colon + 3;
            if (after < text.size() && text[after] == ':') {
                auto sec = parse_int_field(std::string_view(text).substr(after + 1, 2));
                if (sec && *sec >= 0 && *sec < 60) seconds += *sec;
            }
        }
    }
    return seconds;
}

}  // namespace anchorkb
