#include "hardcase/parser.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "hardcase/errors.h"
#include "hardcase/util.h"

namespace hardcase {

std::string to_string(ParseMode mode) {
    return mode == ParseMode::strict ? "strict" : "lenient";
}

ParseMode parse_mode_from_string(const std::string& s) {
    if (s == "strict") return ParseMode::strict;
    if (s == "lenient") return ParseMode::lenient;
    throw UsageError("unknown parse mode '" + s + "' (expected strict|lenient)");
}

std::string to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::refusal: return "refusal";
        case FailureKind::malformed_ranking: return "malformed_ranking";
        case FailureKind::incomplete_ranking: return "incomplete_ranking";
        case FailureKind::unknown_agent_id: return "unknown_agent_id";
        case FailureKind::score_missing: return "score_missing";
        case FailureKind::score_out_of_range: return "score_out_of_range";
    }
    throw InternalError("unhandled FailureKind");
}

namespace {

constexpr const char* kRankingCue = "most difficult to predict agents' rank is";
constexpr const char* kScoreCue = "prediction difficulty is";

const char* kDefaultRefusalPhrases[] = {
    "i'm sorry",
    "i am sorry",
    "i can't assist",
    "i cannot assist",
    "i can't help",
    "i cannot help",
    "unable to assist",
    "unable to help",
    "can't provide",
    "cannot provide",
    "cannot comply",
};

std::string normalize_newlines(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            out.push_back('\n');
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

// Drops ``` fences (and an attached language tag) without touching content.
std::string strip_code_fences(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, 3, "```") == 0) {
            i += 3;
            while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
            continue;
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

// Lowercased copy with whitespace runs collapsed and curly apostrophes
// straightened, plus a map back to original byte offsets.
struct NormText {
    std::string norm;
    std::vector<std::size_t> orig; // norm index -> original index
};

NormText build_norm(const std::string& text) {
    NormText nt;
    nt.norm.reserve(text.size());
    nt.orig.reserve(text.size());
    bool in_space = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == 0xe2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            static_cast<unsigned char>(text[i + 2]) == 0x99) {
            nt.norm.push_back('\'');
            nt.orig.push_back(i);
            i += 2;
            in_space = false;
            continue;
        }
        if (std::isspace(c)) {
            if (!in_space && !nt.norm.empty()) {
                nt.norm.push_back(' ');
                nt.orig.push_back(i);
            }
            in_space = true;
            continue;
        }
        in_space = false;
        nt.norm.push_back(static_cast<char>(std::tolower(c)));
        nt.orig.push_back(i);
    }
    return nt;
}

struct CueMatch {
    std::size_t orig_begin = 0; // original offset of the cue's first byte
    std::size_t orig_end = 0;   // original offset just past the cue's last byte
};

std::optional<CueMatch> find_cue(const NormText& nt, const std::string& cue,
                                 std::size_t orig_from = 0) {
    // first norm position at or past orig_from
    std::size_t start = 0;
    while (start < nt.orig.size() && nt.orig[start] < orig_from) ++start;
    const std::size_t pos = nt.norm.find(cue, start);
    if (pos == std::string::npos) return std::nullopt;
    CueMatch m;
    m.orig_begin = nt.orig[pos];
    m.orig_end = nt.orig[pos + cue.size() - 1] + 1;
    return m;
}

struct ListMatch {
    std::vector<AgentId> ids;
    std::size_t orig_begin = 0; // offset of '['
    std::size_t orig_end = 0;   // offset just past ']'
};

// First bracket group from `from` whose content is a comma/semicolon list of
// integers. Non-integer bracket groups (e.g. the "[A1, A2, ...]" format
// stencil) are skipped.
std::optional<ListMatch> find_int_list(const std::string& text, std::size_t from) {
    for (std::size_t i = from; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        std::vector<AgentId> ids;
        std::size_t j = i + 1;
        bool ok = true;
        bool expecting_number = true;
        while (j < text.size() && text[j] != ']') {
            const unsigned char c = static_cast<unsigned char>(text[j]);
            if (std::isspace(c)) {
                ++j;
            } else if (std::isdigit(c)) {
                if (!expecting_number) {
                    ok = false;
                    break;
                }
                AgentId value = 0;
                int digits = 0;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
                    value = value * 10 + (text[j] - '0');
                    ++j;
                    if (++digits > 12) break; // not an agent id
                }
                if (digits > 12) {
                    ok = false;
                    break;
                }
                ids.push_back(value);
                expecting_number = false;
            } else if (c == ',' || c == ';') {
                if (expecting_number) {
                    ok = false;
                    break;
                }
                expecting_number = true;
                ++j;
            } else {
                ok = false;
                break;
            }
        }
        if (ok && j < text.size() && text[j] == ']' && !ids.empty() && !expecting_number) {
            return ListMatch{std::move(ids), i, j + 1};
        }
    }
    return std::nullopt;
}

bool has_int_list(const std::string& text) { return find_int_list(text, 0).has_value(); }

std::string excerpt_of(const std::string& text) {
    if (text.size() <= 500) return text;
    std::size_t cut = 500;
    // do not split a UTF-8 sequence
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xc0) == 0x80) --cut;
    return text.substr(0, cut);
}

ParseFailure failure(FailureKind kind, std::string detail, const std::string& text) {
    return ParseFailure{kind, std::move(detail), excerpt_of(text)};
}

// Trailing explanation text: strips a leading '.', an "Explanation:" label,
// and for the score block the "From 1 to 10." format remnant.
std::string clean_explanation(std::string_view raw, bool score_block) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '.') s = trim(std::string_view(s).substr(1));
    if (score_block) {
        const std::string lowered = to_lower(s);
        const std::string stencil = "from 1 to 10.";
        if (lowered.rfind(stencil, 0) == 0) s = trim(std::string_view(s).substr(stencil.size()));
    }
    const std::string lowered = to_lower(s);
    if (lowered.rfind("explanation", 0) == 0) {
        std::size_t skip = std::string("explanation").size();
        if (skip < s.size() && s[skip] == ':') ++skip;
        s = trim(std::string_view(s).substr(skip));
    }
    return s;
}

} // namespace

RefusalPhrases RefusalPhrases::defaults() {
    RefusalPhrases r;
    for (const char* phrase : kDefaultRefusalPhrases) r.phrases.emplace_back(phrase);
    return r;
}

RefusalPhrases RefusalPhrases::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read refusal phrase list: " + path);
    RefusalPhrases r;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        r.phrases.push_back(t);
    }
    if (r.phrases.empty()) throw DataError("refusal phrase list is empty: " + path);
    return r;
}

std::optional<Ranking> first_bracketed_list(const std::string& text) {
    const auto match = find_int_list(text, 0);
    if (!match) return std::nullopt;
    return match->ids;
}

bool detect_refusal(const std::string& text, const RefusalPhrases& phrases) {
    if (has_int_list(text)) return false; // a parseable list wins over refusal wording
    const std::string norm = normalize_for_match(text);
    for (const auto& phrase : phrases.phrases) {
        if (norm.find(normalize_for_match(phrase)) != std::string::npos) return true;
    }
    return false;
}

ParseResult parse_response(const std::string& text, const std::set<AgentId>& expected_ids,
                           ParseMode mode, const RefusalPhrases& phrases) {
    if (expected_ids.empty()) throw UsageError("expected_ids must be non-empty");

    const std::string body = strip_code_fences(normalize_newlines(text));

    if (detect_refusal(body, phrases))
        return failure(FailureKind::refusal, "matched a refusal phrase and no ranking list present",
                       text);

    const NormText nt = build_norm(body);
    const auto ranking_cue = find_cue(nt, kRankingCue);
    if (!ranking_cue)
        return failure(FailureKind::malformed_ranking, "ranking cue phrase not found", text);

    const auto list = find_int_list(body, ranking_cue->orig_end);
    if (!list)
        return failure(FailureKind::malformed_ranking,
                       "no bracketed integer list after the ranking cue", text);

    ParsedResponse parsed;
    if (mode == ParseMode::strict) {
        std::set<AgentId> seen;
        for (AgentId id : list->ids) {
            if (!expected_ids.count(id))
                return failure(FailureKind::unknown_agent_id,
                               "agent id " + std::to_string(id) + " is not in the expected set",
                               text);
            if (!seen.insert(id).second)
                return failure(FailureKind::malformed_ranking,
                               "duplicate agent id " + std::to_string(id) + " in ranking", text);
        }
        if (seen.size() != expected_ids.size()) {
            std::string missing;
            for (AgentId id : expected_ids)
                if (!seen.count(id)) missing += (missing.empty() ? "" : ", ") + std::to_string(id);
            return failure(FailureKind::incomplete_ranking, "ranking missing agent ids: " + missing,
                           text);
        }
        parsed.ranking = list->ids;
        parsed.leniency_applied = false;
    } else {
        bool touched = false;
        std::set<AgentId> seen;
        for (AgentId id : list->ids) {
            if (!expected_ids.count(id)) {
                touched = true; // unknown id dropped
                continue;
            }
            if (!seen.insert(id).second) {
                touched = true; // duplicate dropped, first occurrence kept
                continue;
            }
            parsed.ranking.push_back(id);
        }
        if (parsed.ranking.empty())
            return failure(FailureKind::unknown_agent_id,
                           "ranking shares no ids with the expected set", text);
        for (AgentId id : expected_ids) {
            if (!seen.count(id)) {
                parsed.ranking.push_back(id); // expected_ids iterates in ascending order
                touched = true;
            }
        }
        parsed.leniency_applied = touched;
    }

    const auto score_cue = [&]() {
        auto after_list = find_cue(nt, kScoreCue, list->orig_end);
        if (after_list) return after_list;
        return find_cue(nt, kScoreCue);
    }();
    if (!score_cue) return failure(FailureKind::score_missing, "score cue phrase not found", text);

    std::size_t pos = score_cue->orig_end;
    while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
    if (pos >= body.size() || !std::isdigit(static_cast<unsigned char>(body[pos])))
        return failure(FailureKind::score_missing, "no integer after the score cue", text);
    long score = 0;
    while (pos < body.size() && std::isdigit(static_cast<unsigned char>(body[pos]))) {
        if (score <= 1000) score = score * 10 + (body[pos] - '0');
        ++pos;
    }
    if (score < 1 || score > 10)
        return failure(FailureKind::score_out_of_range,
                       "score " + std::to_string(score) + " outside [1, 10]", text);
    parsed.score = static_cast<int>(score);

    // Ranking explanation runs from the list to the start of the score block
    // (its line, or the cue itself when both blocks share a line).
    std::size_t block_begin = body.rfind('\n', score_cue->orig_begin);
    block_begin = (block_begin == std::string::npos) ? 0 : block_begin + 1;
    if (block_begin < list->orig_end) block_begin = score_cue->orig_begin;
    if (block_begin < list->orig_end) block_begin = list->orig_end;
    parsed.ranking_explanation = clean_explanation(
        std::string_view(body).substr(list->orig_end, block_begin - list->orig_end), false);
    parsed.score_explanation = clean_explanation(std::string_view(body).substr(pos), true);

    return parsed;
}

std::string render_response(const Ranking& ranking, int score,
                            const std::string& ranking_explanation,
                            const std::string& score_explanation) {
    std::ostringstream out;
    out << "1: The most difficult to predict agents' rank is [";
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (i) out << ", ";
        out << ranking[i];
    }
    out << "]. Explanation: " << ranking_explanation << "\n";
    out << "2: Overall, the prediction difficulty is " << score
        << ". Explanation: " << score_explanation;
    return out.str();
}

} // namespace hardcase
