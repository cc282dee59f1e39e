#include "valex/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "valex/error.hpp"
#include "valex/rng.hpp"

namespace valex {

namespace {

constexpr const char* kSentenceHeader = "text\tlabel";

void check_text(const std::string& text, const std::string& where) {
    if (text.empty()) throw ValidationError(where + ": empty text");
    if (text.find('\t') != std::string::npos || text.find('\n') != std::string::npos ||
        text.find('\r') != std::string::npos) {
        throw ValidationError(where + ": text contains tab or newline");
    }
}

}  // namespace

void LabeledSentenceSet::validate() const {
    if (labels.size() < 2) throw ValidationError("label vocabulary needs at least 2 classes");
    std::set<std::string> vocab(labels.begin(), labels.end());
    if (vocab.size() != labels.size()) throw ValidationError("duplicate labels in vocabulary");
    auto check_split = [&](const std::vector<LabeledSentence>& split, const char* name) {
        for (const auto& r : split) {
            if (!vocab.count(r.label)) {
                throw ValidationError(std::string(name) + " split: label '" + r.label +
                                      "' not in declared vocabulary");
            }
        }
    };
    check_split(train, "train");
    check_split(dev, "dev");
    check_split(test, "test");

    auto check_disjoint = [](const std::vector<LabeledSentence>& a, const std::vector<LabeledSentence>& b,
                             const char* an, const char* bn) {
        std::unordered_set<std::string> texts;
        for (const auto& r : a) texts.insert(r.text);
        for (const auto& r : b) {
            if (texts.count(r.text)) {
                throw ValidationError(std::string(an) + " and " + bn + " splits overlap on '" + r.text + "'");
            }
        }
    };
    check_disjoint(train, dev, "train", "dev");
    check_disjoint(train, test, "train", "test");
    check_disjoint(dev, test, "dev", "test");
}

int LabeledSentenceSet::label_index(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

std::vector<std::string> LabeledSentenceSet::observed_labels(
    const std::vector<LabeledSentence>& split) const {
    std::set<std::string> seen;
    for (const auto& r : split) seen.insert(r.label);
    return {seen.begin(), seen.end()};
}

LabeledSentenceSet LabeledSentenceSet::from_records(std::vector<LabeledSentence> train,
                                                    std::vector<LabeledSentence> dev,
                                                    std::vector<LabeledSentence> test) {
    LabeledSentenceSet set;
    set.train = std::move(train);
    set.dev = std::move(dev);
    set.test = std::move(test);
    std::set<std::string> vocab;
    for (const auto* split : {&set.train, &set.dev, &set.test}) {
        for (const auto& r : *split) vocab.insert(r.label);
    }
    set.labels.assign(vocab.begin(), vocab.end());
    set.validate();
    return set;
}

LabeledSentenceSet LabeledSentenceSet::from_dir(const std::filesystem::path& dir) {
    auto load_if_present = [&](const char* name) -> std::vector<LabeledSentence> {
        auto path = dir / name;
        if (!std::filesystem::exists(path)) return {};
        return load_sentences(path);
    };
    return from_records(load_if_present("train.tsv"), load_if_present("dev.tsv"),
                        load_if_present("test.tsv"));
}

void LabeledSentenceSet::save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    save_sentences(train, dir / "train.tsv");
    save_sentences(dev, dir / "dev.tsv");
    save_sentences(test, dir / "test.tsv");
}

std::vector<LabeledSentence> load_sentences(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<LabeledSentence> records;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kSentenceHeader) {
                throw IoError(path.string() + ": line 1: bad header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        auto first_tab = line.find('\t');
        if (first_tab == std::string::npos || line.find('\t', first_tab + 1) != std::string::npos) {
            throw IoError(path.string() + ": line " + std::to_string(line_no) +
                          ": expected exactly one tab separating text and label");
        }
        LabeledSentence r{line.substr(0, first_tab), line.substr(first_tab + 1)};
        if (r.text.empty() || r.label.empty()) {
            throw IoError(path.string() + ": line " + std::to_string(line_no) + ": empty text or label");
        }
        records.push_back(std::move(r));
    }
    if (!header_seen) throw IoError(path.string() + ": missing header line");
    return records;
}

void save_sentences(const std::vector<LabeledSentence>& records, const std::filesystem::path& path) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        check_text(records[i].text, "record " + std::to_string(i));
        check_text(records[i].label, "record " + std::to_string(i));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << kSentenceHeader << '\n';
    for (const auto& r : records) out << r.text << '\t' << r.label << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

// k distinct indices of [0, n), seeded, returned in ascending order.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

LabeledSentenceSet fewshot_sample(const LabeledSentenceSet& dataset, std::size_t n_train,
                                  std::size_t n_dev, std::uint64_t seed) {
    if (dataset.train.size() < n_train) {
        throw ValidationError("few-shot needs " + std::to_string(n_train) + " train rows, have " +
                              std::to_string(dataset.train.size()));
    }
    if (dataset.dev.size() < n_dev) {
        throw ValidationError("few-shot needs " + std::to_string(n_dev) + " dev rows, have " +
                              std::to_string(dataset.dev.size()));
    }
    Rng rng(seed);
    LabeledSentenceSet out;
    out.labels = dataset.labels;
    for (auto i : sample_indices(dataset.train.size(), n_train, rng)) out.train.push_back(dataset.train[i]);
    for (auto i : sample_indices(dataset.dev.size(), n_dev, rng)) out.dev.push_back(dataset.dev[i]);
    out.test = dataset.test;
    return out;
}

}  // namespace valex
