#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "valex/types.hpp"

namespace valex {

enum class SentimentClass { negative, neutral, positive };
enum class ClassMode { binary, three_way };
enum class EntrySource { original, translated, projected, accepted_by_filter };
enum class SplitSlot { train, validation };
enum class MergePolicy { mean, keep_first, error };

std::string to_string(SentimentClass c);
SentimentClass sentiment_class_from_string(const std::string& s);
std::string to_string(EntrySource s);
EntrySource entry_source_from_string(const std::string& s);

// Maps a raw [0,1] annotation score onto the [-5,5] working scale.
Scalar normalize_raw(Scalar raw);

// Class boundaries: three-way puts neutral on [-1,1); binary splits at 0 with
// the tie going positive.
SentimentClass class_of(Scalar valence, ClassMode mode);

// True for lowercase 2-3 letter codes, optionally "-" plus a short
// alphanumeric suffix ("en", "ace", "pt-MZ", "en-es").
bool is_valid_lang_code(const std::string& lang);

// One scored word. Valence is always on the [-5,5] scale; arousal and
// dominance ride along untouched when the source file has them.
struct LexiconEntry {
    std::string word;
    std::string lang;
    Scalar valence = 0.0;
    std::optional<Scalar> arousal;
    std::optional<Scalar> dominance;
    EntrySource source = EntrySource::original;

    // Trims the word, validates all invariants. Throws ValidationError.
    static LexiconEntry make(std::string word, std::string lang, Scalar valence,
                             std::optional<Scalar> arousal = std::nullopt,
                             std::optional<Scalar> dominance = std::nullopt,
                             EntrySource source = EntrySource::original);

    std::string key() const { return lang + "\t" + word; }

    bool operator==(const LexiconEntry&) const = default;
};

// Keyed collection of entries. Keys are (word, lang); entries are kept in
// canonical order (lang, then word, lexicographic by byte value) so that two
// lexicons with the same content serialize identically.
class ValenceLexicon {
public:
    ValenceLexicon() = default;

    // Throws ValidationError on a duplicate key.
    void add(LexiconEntry entry);

    bool contains(const std::string& word, const std::string& lang) const;
    const LexiconEntry* find(const std::string& word, const std::string& lang) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    // Entries in canonical order.
    std::vector<LexiconEntry> sorted_entries() const;
    const std::vector<LexiconEntry>& entries() const { return entries_; }

    // Deterministic 80:20-style split over all keys, driven by a seeded hash
    // of (word, lang) so it never depends on insertion order. Train count is
    // round(ratio * n).
    void assign_split(Scalar train_ratio, std::uint64_t seed);
    void clear_split() { split_.clear(); }
    bool has_split() const { return !split_.empty(); }
    std::optional<SplitSlot> split_of(const LexiconEntry& entry) const;
    std::size_t count_in_split(SplitSlot slot) const;

    // Split assignment for a batch of keys, same hash scheme; exposed so the
    // filter can place each accepted batch proportionally (within 1 entry).
    static std::vector<SplitSlot> split_batch(const std::vector<std::string>& keys,
                                              Scalar train_ratio, std::uint64_t seed);
    void set_split(const LexiconEntry& entry, SplitSlot slot);

    // Content hash over the canonical serialization, for checkpoint metadata.
    std::uint64_t content_hash() const;

    bool operator==(const ValenceLexicon& other) const;

private:
    std::vector<LexiconEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, SplitSlot> split_;
};

// TSV schema: header `word<TAB>lang<TAB>valence[<TAB>arousal<TAB>dominance]`,
// optional `#scale=raw|normalized` pragma line before the header (default
// normalized). Raw-scale files are normalized on load; files are always
// written on the normalized scale, in canonical row order.
ValenceLexicon load_lexicon(const std::filesystem::path& path,
                            std::optional<MergePolicy> duplicate_policy = std::nullopt);
void save_lexicon(const ValenceLexicon& lexicon, const std::filesystem::path& path);
std::string lexicon_to_tsv(const ValenceLexicon& lexicon);
ValenceLexicon lexicon_from_tsv(const std::string& text,
                                std::optional<MergePolicy> duplicate_policy = std::nullopt,
                                const std::string& origin = "<string>");

ValenceLexicon merge_lexicons(const ValenceLexicon& a, const ValenceLexicon& b, MergePolicy policy);

// Shortest round-trip decimal formatting (std::to_chars); used everywhere a
// score is written to disk so that save/load is byte-stable.
std::string format_scalar(Scalar v);

}  // namespace valex
