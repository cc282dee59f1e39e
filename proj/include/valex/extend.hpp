#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "valex/lexicon.hpp"

namespace valex {

// One directed translation pair, source side expected to be English.
struct TranslationEdge {
    std::string src_word;
    std::string src_lang;
    std::string tgt_word;
    std::string tgt_lang;

    // Validates non-empty words, valid codes, src != tgt. Throws ValidationError.
    static TranslationEdge make(std::string src_word, std::string src_lang, std::string tgt_word,
                                std::string tgt_lang);

    bool operator==(const TranslationEdge&) const = default;
};

// Bookkeeping for one projection run. For every usable edge (English source
// present in the base lexicon, target language requested) either a new entry
// is added or the edge merges into an existing one, so
//   sum(added_per_lang) + duplicates_merged == usable_edges.
struct ProjectionReport {
    std::map<std::string, std::size_t> added_per_lang;
    std::size_t skipped_no_source = 0;   // English word absent from the base lexicon
    std::size_t ignored_edges = 0;       // wrong source language or target not requested
    std::size_t duplicates_merged = 0;
    std::size_t usable_edges = 0;
    std::size_t total_edges = 0;

    std::size_t total_added() const;
    std::string to_json() const;
};

struct ProjectionOptions {
    bool case_fold = false;  // case-insensitive source-word matching
};

struct ProjectionResult {
    ValenceLexicon projected;  // only the new entries; caller merges with the base
    ProjectionReport report;
};

// Copies English valence scores onto target-language words along translation
// edges. A target word reached from several English sources gets the mean of
// their scores. Arousal/dominance are not projected.
ProjectionResult project_scores(const ValenceLexicon& base, const std::vector<TranslationEdge>& edges,
                                const std::set<std::string>& target_langs,
                                const ProjectionOptions& options = {});

// Edge TSV: header `src_word<TAB>src_lang<TAB>tgt_word<TAB>tgt_lang`.
std::vector<TranslationEdge> load_edges(const std::filesystem::path& path);
void save_edges(const std::vector<TranslationEdge>& edges, const std::filesystem::path& path);

}  // namespace valex
