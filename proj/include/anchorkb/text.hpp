#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace anchorkb {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercases and splits on every byte that is not an ASCII letter or digit.
// Multi-byte UTF-8 sequences therefore act as separators.
std::vector<std::string> tokenize(std::string_view s);

// The fixed function-word list used when reducing text to content words.
// Matching is exact on lowercased tokens.
const std::array<std::string_view, 35>& stopwords();
bool is_stopword(std::string_view token);

// tokenize() with stopwords removed; order and duplicates preserved.
std::vector<std::string> content_words(std::string_view s);

std::set<std::string> token_set(std::string_view s);
std::set<std::string> content_word_set(std::string_view s);

// |A ∩ B| / |A ∪ B|, with the empty-vs-empty case defined as 0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// FNV-1a, 64-bit: offset basis 0xcbf29ce484222325, prime 0x100000001b3.
std::uint64_t fnv1a64(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

struct CivilDate {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

// Days since 1970-01-01 (proleptic Gregorian).
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

// 0 = Sunday .. 6 = Saturday.
int day_of_week(const CivilDate& d);
std::string_view weekday_name(const CivilDate& d);

// Month name or three-letter abbreviation to 1..12, case-insensitive.
std::optional<int> parse_month_name(std::string_view word);

// Accepts "YYYY-MM-DD", "YYYY/MM/DD", "Month D, YYYY", "Month D YYYY",
// "D Month YYYY" and "D Month, YYYY". Leading/trailing whitespace and a
// trailing time-of-day portion are tolerated.
std::optional<CivilDate> parse_date(std::string_view s);

// Seconds since the epoch for a date with an optional "HH:MM[:SS]" part
// (separated from the date by a space or 'T'). Dates without a time parse
// as midnight. No time-zone handling: values are compared, not displayed.
std::optional<std::int64_t> parse_timestamp_seconds(std::string_view s);

}  // namespace anchorkb
