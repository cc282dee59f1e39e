#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace valex {

struct LabeledSentence {
    std::string text;
    std::string label;

    bool operator==(const LabeledSentence&) const = default;
};

// Sentence-level dataset with named train/dev/test splits and a declared
// label vocabulary (canonical = sorted unique). Splits must be disjoint by
// text and every record's label must be in the vocabulary.
struct LabeledSentenceSet {
    std::vector<std::string> labels;
    std::vector<LabeledSentence> train;
    std::vector<LabeledSentence> dev;
    std::vector<LabeledSentence> test;

    void validate() const;
    int label_index(const std::string& label) const;  // -1 when absent
    std::vector<std::string> observed_labels(const std::vector<LabeledSentence>& split) const;

    // Loads `<dir>/{train,dev,test}.tsv`; missing split files yield empty
    // splits. The vocabulary is the sorted union over all splits.
    static LabeledSentenceSet from_dir(const std::filesystem::path& dir);
    static LabeledSentenceSet from_records(std::vector<LabeledSentence> train,
                                           std::vector<LabeledSentence> dev,
                                           std::vector<LabeledSentence> test);
    void save_dir(const std::filesystem::path& dir) const;
};

// Sentence TSV: header `text<TAB>label`; tab and newline characters inside
// the text are rejected with the offending line number.
std::vector<LabeledSentence> load_sentences(const std::filesystem::path& path);
void save_sentences(const std::vector<LabeledSentence>& records, const std::filesystem::path& path);

// Uniform sampling without replacement: n_train rows from train and n_dev
// from dev, deterministic per seed, test passed through untouched. Sampled
// rows keep their original relative order.
LabeledSentenceSet fewshot_sample(const LabeledSentenceSet& dataset, std::size_t n_train,
                                  std::size_t n_dev, std::uint64_t seed);

}  // namespace valex
