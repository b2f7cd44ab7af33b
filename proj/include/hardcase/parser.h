#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hardcase/scenario.h"

namespace hardcase {

enum class ParseMode { strict, lenient };

std::string to_string(ParseMode mode);
ParseMode parse_mode_from_string(const std::string& s);

struct ParsedResponse {
    Ranking ranking; // permutation of the expected agent ids
    int score = 0;   // 1..10
    std::string ranking_explanation;
    std::string score_explanation;
    bool leniency_applied = false;
};

enum class FailureKind {
    refusal,
    malformed_ranking,
    incomplete_ranking,
    unknown_agent_id,
    score_missing,
    score_out_of_range,
};

std::string to_string(FailureKind kind);

struct ParseFailure {
    FailureKind kind{};
    std::string detail;
    std::string raw_excerpt; // <= 500 characters
};

using ParseResult = std::variant<ParsedResponse, ParseFailure>;

// Case-insensitive substrings that mark a refusal when no bracketed integer
// list is present. File format: one phrase per line, '#' comments allowed.
struct RefusalPhrases {
    std::vector<std::string> phrases;
    static RefusalPhrases defaults();
    static RefusalPhrases load(const std::string& path);
};

bool detect_refusal(const std::string& text,
                    const RefusalPhrases& phrases = RefusalPhrases::defaults());

// First bracketed integer list anywhere in the text, if any.
std::optional<Ranking> first_bracketed_list(const std::string& text);

// Extracts the agent ranking (first bracketed integer list after the ranking
// cue), the 1-10 difficulty score, and the trailing explanation of each
// answer block. Lenient mode repairs duplicate/unknown/missing ids; strict
// mode demands an exact permutation.
ParseResult parse_response(const std::string& text, const std::set<AgentId>& expected_ids,
                           ParseMode mode,
                           const RefusalPhrases& phrases = RefusalPhrases::defaults());

// Canonical answer format; the mock backends emit this and
// parse_response(render_response(r, s)) round-trips exactly.
std::string render_response(const Ranking& ranking, int score,
                            const std::string& ranking_explanation = "",
                            const std::string& score_explanation = "");

} // namespace hardcase
