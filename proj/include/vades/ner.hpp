#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "vades/pos.hpp"

namespace vades {

enum class NerLabel : int { PERSON, LOCATION, ORGANIZATION, DATE, NUMBER, NONE };

inline constexpr int kNumNerLabels = 6;

inline const std::array<std::string_view, kNumNerLabels>& ner_label_names() {
    static const std::array<std::string_view, kNumNerLabels> names = {
        "PERSON", "LOCATION", "ORGANIZATION", "DATE", "NUMBER", "NONE",
    };
    return names;
}

namespace detail {

inline const std::unordered_set<std::string>& person_gazetteer() {
    static const std::unordered_set<std::string> set = {
        "john", "mary", "james", "robert", "michael", "william", "david",
        "richard", "joseph", "thomas", "charles", "christopher", "daniel",
        "matthew", "anthony", "mark", "donald", "steven", "paul", "andrew",
        "joshua", "kenneth", "kevin", "brian", "george", "edward", "ronald",
        "timothy", "jason", "jeffrey", "ryan", "jacob", "gary", "nicholas",
        "eric", "jonathan", "stephen", "larry", "justin", "scott", "frank",
        "benjamin", "samuel", "gregory", "raymond", "alexander", "patrick",
        "jack", "dennis", "jerry", "henry", "peter", "adam", "nathan",
        "walter", "harold", "carl", "arthur", "albert", "lawrence", "joe",
        "noah", "jesse", "hugh", "oscar", "victor", "leo", "simon",
        "elizabeth", "jennifer", "linda", "patricia", "susan", "jessica",
        "sarah", "karen", "nancy", "lisa", "margaret", "betty", "sandra",
        "dorothy", "emily", "donna", "michelle", "carol", "amanda", "anna",
        "helen", "emma", "olivia", "sophia", "isabella", "charlotte",
        "alice", "jane", "catherine", "victoria", "grace", "julia", "lucy",
        "anne", "laura", "rachel", "katherine", "maria", "clara", "agnes",
        "edith", "harriet", "eleanor", "martha", "ruth", "esther",
    };
    return set;
}

inline const std::unordered_set<std::string>& location_gazetteer() {
    static const std::unordered_set<std::string> set = {
        "london", "paris", "england", "france", "america", "india", "china",
        "japan", "germany", "italy", "spain", "russia", "rome", "berlin",
        "madrid", "moscow", "tokyo", "beijing", "boston", "chicago",
        "texas", "california", "washington", "canada", "mexico", "brazil",
        "egypt", "africa", "europe", "asia", "australia", "ireland",
        "scotland", "wales", "athens", "vienna", "amsterdam", "dublin",
        "edinburgh", "venice", "florence", "naples", "geneva", "zurich",
        "brussels", "lisbon", "oxford", "cambridge", "virginia", "florida",
        "ohio", "alaska", "hawaii", "jerusalem", "istanbul", "cairo",
        "delhi", "mumbai", "sydney", "melbourne", "toronto", "montreal",
        "denmark", "sweden", "norway", "finland", "poland", "greece",
        "turkey", "persia", "arabia", "babylon", "britain", "holland",
        "switzerland", "austria", "hungary", "portugal", "belgium",
    };
    return set;
}

inline const std::unordered_set<std::string>& org_gazetteer() {
    static const std::unordered_set<std::string> set = {
        "google", "microsoft", "amazon", "ibm", "intel", "nasa", "fbi",
        "cia", "un", "eu", "unesco", "nato", "parliament", "congress",
        "senate",
    };
    return set;
}

// a capitalized token directly before one of these is organization-like
inline const std::unordered_set<std::string>& org_suffixes() {
    static const std::unordered_set<std::string> set = {
        "inc", "corp", "co", "ltd", "llc", "company", "corporation",
        "university", "college", "institute", "bank", "press", "church",
        "ministry", "academy", "society", "association", "club",
        "committee", "council", "agency", "bureau", "department",
    };
    return set;
}

inline const std::unordered_set<std::string>& date_words() {
    static const std::unordered_set<std::string> set = {
        "january", "february", "march", "april", "may", "june", "july",
        "august", "september", "october", "november", "december",
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
        "sunday",
    };
    return set;
}

inline bool is_capitalized(std::string_view t) {
    return !t.empty() && t[0] >= 'A' && t[0] <= 'Z';
}

inline bool is_four_digit_year(std::string_view t) {
    if (t.size() != 4) return false;
    for (unsigned char c : t) {
        if (!is_ascii_digit(c)) return false;
    }
    const int v = (t[0] - '0') * 1000 + (t[1] - '0') * 100 + (t[2] - '0') * 10 +
                  (t[3] - '0');
    return v >= 1000 && v <= 2100;
}

} // namespace detail

// Pattern + gazetteer entity tagging. Capitalization gates the gazetteers so
// sentence-internal "may"/"march" stay NONE; 4-digit values in 1000..2100 are
// dates, other numerals numbers. A capitalized token followed by an
// organization suffix ("... University") is tagged ORGANIZATION.
inline std::vector<NerLabel> ner_tag(const std::vector<std::string>& tokens) {
    using namespace detail;
    std::vector<NerLabel> out(tokens.size(), NerLabel::NONE);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t.empty()) continue;
        if (is_numeric_token(t)) {
            out[i] = is_four_digit_year(t) ? NerLabel::DATE : NerLabel::NUMBER;
            continue;
        }
        if (!is_capitalized(t)) continue;
        std::string low;
        low.reserve(t.size());
        for (unsigned char c : t) low.push_back(lower(c));
        if (date_words().count(low)) {
            out[i] = NerLabel::DATE;
        } else if (person_gazetteer().count(low)) {
            out[i] = NerLabel::PERSON;
        } else if (location_gazetteer().count(low)) {
            out[i] = NerLabel::LOCATION;
        } else if (org_gazetteer().count(low) || org_suffixes().count(low)) {
            out[i] = NerLabel::ORGANIZATION;
        } else if (i + 1 < tokens.size() && is_capitalized(tokens[i + 1])) {
            std::string next_low;
            for (unsigned char c : tokens[i + 1]) next_low.push_back(lower(c));
            if (org_suffixes().count(next_low)) {
                out[i] = NerLabel::ORGANIZATION;
            }
        }
    }
    return out;
}

} // namespace vades
