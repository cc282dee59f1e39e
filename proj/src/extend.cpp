#include "valex/extend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "valex/error.hpp"

#include <nlohmann/json.hpp>

namespace valex {

namespace {

constexpr const char* kEdgeHeader = "src_word\tsrc_lang\ttgt_word\ttgt_lang";

std::string ascii_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

TranslationEdge TranslationEdge::make(std::string src_word, std::string src_lang, std::string tgt_word,
                                      std::string tgt_lang) {
    if (src_word.empty() || tgt_word.empty()) throw ValidationError("translation edge with empty word");
    if (!is_valid_lang_code(src_lang)) throw ValidationError("invalid source language '" + src_lang + "'");
    if (!is_valid_lang_code(tgt_lang)) throw ValidationError("invalid target language '" + tgt_lang + "'");
    if (src_lang == tgt_lang) {
        throw ValidationError("edge '" + src_word + "' -> '" + tgt_word + "' maps a language onto itself");
    }
    return TranslationEdge{std::move(src_word), std::move(src_lang), std::move(tgt_word),
                           std::move(tgt_lang)};
}

std::size_t ProjectionReport::total_added() const {
    std::size_t n = 0;
    for (const auto& [lang, count] : added_per_lang) n += count;
    return n;
}

std::string ProjectionReport::to_json() const {
    nlohmann::json j;
    j["added_per_lang"] = added_per_lang;
    j["total_added"] = total_added();
    j["skipped_no_source"] = skipped_no_source;
    j["ignored_edges"] = ignored_edges;
    j["duplicates_merged"] = duplicates_merged;
    j["usable_edges"] = usable_edges;
    j["total_edges"] = total_edges;
    return j.dump(2);
}

ProjectionResult project_scores(const ValenceLexicon& base, const std::vector<TranslationEdge>& edges,
                                const std::set<std::string>& target_langs,
                                const ProjectionOptions& options) {
    if (target_langs.empty()) throw ValidationError("no target languages given");

    // Source lookup over the English side of the base lexicon.
    std::unordered_map<std::string, Scalar> english;
    for (const auto& e : base.entries()) {
        if (e.lang != "en") continue;
        english.emplace(options.case_fold ? ascii_lower(e.word) : e.word, e.valence);
    }

    struct Accum {
        Scalar sum = 0;
        std::size_t count = 0;
        std::string word;
        std::string lang;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Accum> by_key;
    ProjectionReport report;
    report.total_edges = edges.size();

    for (const auto& edge : edges) {
        if (edge.src_lang != "en" || !target_langs.count(edge.tgt_lang)) {
            ++report.ignored_edges;
            continue;
        }
        auto it = english.find(options.case_fold ? ascii_lower(edge.src_word) : edge.src_word);
        if (it == english.end()) {
            ++report.skipped_no_source;
            continue;
        }
        ++report.usable_edges;
        std::string key = edge.tgt_lang + "\t" + edge.tgt_word;
        auto [slot, inserted] = by_key.try_emplace(key);
        if (inserted) {
            order.push_back(key);
            slot->second.word = edge.tgt_word;
            slot->second.lang = edge.tgt_lang;
            ++report.added_per_lang[edge.tgt_lang];
        } else {
            ++report.duplicates_merged;
        }
        slot->second.sum += it->second;
        slot->second.count += 1;
    }

    ProjectionResult result;
    result.report = std::move(report);
    for (const auto& key : order) {
        const auto& acc = by_key.at(key);
        result.projected.add(LexiconEntry::make(acc.word, acc.lang, acc.sum / static_cast<Scalar>(acc.count),
                                                std::nullopt, std::nullopt, EntrySource::projected));
    }
    return result;
}

std::vector<TranslationEdge> load_edges(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<TranslationEdge> edges;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kEdgeHeader) {
                throw IoError(path.string() + ": line 1: bad edge header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t tab = line.find('\t'); tab != std::string::npos; tab = line.find('\t', start)) {
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        fields.push_back(line.substr(start));
        if (fields.size() != 4) {
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": expected 4 fields, got " +
                          std::to_string(fields.size()));
        }
        try {
            edges.push_back(TranslationEdge::make(fields[0], fields[1], fields[2], fields[3]));
        } catch (const ValidationError& e) {
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen) throw IoError(path.string() + ": missing header line");
    return edges;
}

void save_edges(const std::vector<TranslationEdge>& edges, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << kEdgeHeader << '\n';
    for (const auto& e : edges) {
        out << e.src_word << '\t' << e.src_lang << '\t' << e.tgt_word << '\t' << e.tgt_lang << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace valex
