#include "valex/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "valex/error.hpp"
#include "valex/rng.hpp"

namespace valex {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

Scalar parse_scalar(const std::string& field, const std::string& what, std::size_t line_no) {
    Scalar value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw IoError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + field + "'");
    }
    return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::optional<Scalar> resolve_mean(const std::optional<Scalar>& a, const std::optional<Scalar>& b) {
    if (a && b) return (*a + *b) / 2.0;
    return a ? a : b;
}

}  // namespace

std::string to_string(SentimentClass c) {
    switch (c) {
        case SentimentClass::negative: return "negative";
        case SentimentClass::neutral: return "neutral";
        case SentimentClass::positive: return "positive";
    }
    throw Error("unreachable sentiment class");
}

SentimentClass sentiment_class_from_string(const std::string& s) {
    if (s == "negative") return SentimentClass::negative;
    if (s == "neutral") return SentimentClass::neutral;
    if (s == "positive") return SentimentClass::positive;
    throw ValidationError("unknown sentiment class '" + s + "'");
}

std::string to_string(EntrySource s) {
    switch (s) {
        case EntrySource::original: return "original";
        case EntrySource::translated: return "translated";
        case EntrySource::projected: return "projected";
        case EntrySource::accepted_by_filter: return "accepted-by-filter";
    }
    throw Error("unreachable entry source");
}

EntrySource entry_source_from_string(const std::string& s) {
    if (s == "original") return EntrySource::original;
    if (s == "translated") return EntrySource::translated;
    if (s == "projected") return EntrySource::projected;
    if (s == "accepted-by-filter") return EntrySource::accepted_by_filter;
    throw ValidationError("unknown entry source '" + s + "'");
}

Scalar normalize_raw(Scalar raw) {
    if (!(raw >= 0.0 && raw <= 1.0)) {
        throw ValidationError("raw score " + format_scalar(raw) + " outside [0,1]");
    }
    return 10.0 * raw - 5.0;
}

SentimentClass class_of(Scalar valence, ClassMode mode) {
    if (!(valence >= -5.0 && valence <= 5.0)) {
        throw ValidationError("valence " + format_scalar(valence) + " outside [-5,5]");
    }
    if (mode == ClassMode::binary) {
        return valence < 0.0 ? SentimentClass::negative : SentimentClass::positive;
    }
    if (valence < -1.0) return SentimentClass::negative;
    if (valence < 1.0) return SentimentClass::neutral;
    return SentimentClass::positive;
}

bool is_valid_lang_code(const std::string& lang) {
    auto alnum = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    };
    std::size_t i = 0;
    while (i < lang.size() && lang[i] >= 'a' && lang[i] <= 'z') ++i;
    if (i < 2 || i > 3) return false;
    if (i == lang.size()) return true;
    if (lang[i] != '-') return false;
    std::size_t suffix = lang.size() - i - 1;
    if (suffix < 1 || suffix > 8) return false;
    for (std::size_t j = i + 1; j < lang.size(); ++j) {
        if (!alnum(lang[j])) return false;
    }
    return true;
}

LexiconEntry LexiconEntry::make(std::string word, std::string lang, Scalar valence,
                                std::optional<Scalar> arousal, std::optional<Scalar> dominance,
                                EntrySource source) {
    word = trim(word);
    if (word.empty()) throw ValidationError("empty word");
    if (word.find('\t') != std::string::npos || word.find('\n') != std::string::npos ||
        word.find('\r') != std::string::npos) {
        throw ValidationError("word '" + word + "' contains tab or newline");
    }
    if (!is_valid_lang_code(lang)) throw ValidationError("invalid language code '" + lang + "'");
    auto check_range = [](Scalar v, const char* what) {
        if (!(v >= -5.0 && v <= 5.0)) {
            throw ValidationError(std::string(what) + " " + format_scalar(v) + " outside [-5,5]");
        }
    };
    check_range(valence, "valence");
    if (arousal) check_range(*arousal, "arousal");
    if (dominance) check_range(*dominance, "dominance");
    LexiconEntry e;
    e.word = std::move(word);
    e.lang = std::move(lang);
    e.valence = valence;
    e.arousal = arousal;
    e.dominance = dominance;
    e.source = source;
    return e;
}

void ValenceLexicon::add(LexiconEntry entry) {
    auto [it, inserted] = index_.emplace(entry.key(), entries_.size());
    if (!inserted) {
        throw ValidationError("duplicate key (" + entry.word + ", " + entry.lang + ")");
    }
    entries_.push_back(std::move(entry));
}

bool ValenceLexicon::contains(const std::string& word, const std::string& lang) const {
    return index_.count(lang + "\t" + word) > 0;
}

const LexiconEntry* ValenceLexicon::find(const std::string& word, const std::string& lang) const {
    auto it = index_.find(lang + "\t" + word);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<LexiconEntry> ValenceLexicon::sorted_entries() const {
    std::vector<LexiconEntry> out = entries_;
    std::sort(out.begin(), out.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
        if (a.lang != b.lang) return a.lang < b.lang;
        return a.word < b.word;
    });
    return out;
}

std::vector<SplitSlot> ValenceLexicon::split_batch(const std::vector<std::string>& keys,
                                                   Scalar train_ratio, std::uint64_t seed) {
    struct Ranked {
        std::uint64_t h;
        std::size_t pos;
    };
    std::vector<Ranked> ranked(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        ranked[i] = {mix64(fnv1a64(keys[i], fnv1a64(seed))), i};
    }
    std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.h != b.h) return a.h < b.h;
        return keys[a.pos] < keys[b.pos];
    });
    auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<Scalar>(keys.size())));
    std::vector<SplitSlot> slots(keys.size(), SplitSlot::validation);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        slots[ranked[r].pos] = r < n_train ? SplitSlot::train : SplitSlot::validation;
    }
    return slots;
}

void ValenceLexicon::assign_split(Scalar train_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw ValidationError("train ratio " + format_scalar(train_ratio) + " outside (0,1)");
    }
    std::vector<std::string> keys;
    keys.reserve(entries_.size());
    for (const auto& e : entries_) keys.push_back(e.key());
    auto slots = split_batch(keys, train_ratio, seed);
    split_.clear();
    for (std::size_t i = 0; i < keys.size(); ++i) split_[keys[i]] = slots[i];
}

std::optional<SplitSlot> ValenceLexicon::split_of(const LexiconEntry& entry) const {
    auto it = split_.find(entry.key());
    if (it == split_.end()) return std::nullopt;
    return it->second;
}

std::size_t ValenceLexicon::count_in_split(SplitSlot slot) const {
    std::size_t n = 0;
    for (const auto& [key, s] : split_) {
        if (s == slot) ++n;
    }
    return n;
}

void ValenceLexicon::set_split(const LexiconEntry& entry, SplitSlot slot) {
    if (!index_.count(entry.key())) {
        throw ValidationError("cannot assign split for unknown key (" + entry.word + ", " + entry.lang + ")");
    }
    split_[entry.key()] = slot;
}

std::uint64_t ValenceLexicon::content_hash() const {
    return fnv1a64(lexicon_to_tsv(*this));
}

bool ValenceLexicon::operator==(const ValenceLexicon& other) const {
    return sorted_entries() == other.sorted_entries();
}

std::string format_scalar(Scalar v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("scalar formatting failed");
    return std::string(buf, ptr);
}

namespace {

constexpr const char* kHeader3 = "word\tlang\tvalence";
constexpr const char* kHeader4 = "word\tlang\tvalence\tarousal";
constexpr const char* kHeader5 = "word\tlang\tvalence\tarousal\tdominance";

}  // namespace

std::string lexicon_to_tsv(const ValenceLexicon& lexicon) {
    auto rows = lexicon.sorted_entries();
    bool any_dominance = false;
    bool any_arousal = false;
    for (const auto& e : rows) {
        any_arousal |= e.arousal.has_value();
        any_dominance |= e.dominance.has_value();
    }
    int columns = any_dominance ? 5 : (any_arousal ? 4 : 3);
    std::string out;
    out += columns == 5 ? kHeader5 : (columns == 4 ? kHeader4 : kHeader3);
    out += '\n';
    for (const auto& e : rows) {
        out += e.word;
        out += '\t';
        out += e.lang;
        out += '\t';
        out += format_scalar(e.valence);
        if (columns >= 4) {
            out += '\t';
            if (e.arousal) out += format_scalar(*e.arousal);
        }
        if (columns == 5) {
            out += '\t';
            if (e.dominance) out += format_scalar(*e.dominance);
        }
        out += '\n';
    }
    return out;
}

void save_lexicon(const ValenceLexicon& lexicon, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << lexicon_to_tsv(lexicon);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ValenceLexicon lexicon_from_tsv(const std::string& text, std::optional<MergePolicy> duplicate_policy,
                                const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool raw_scale = false;
    bool header_seen = false;
    int columns = 0;

    struct Pending {
        LexiconEntry entry;
        int count = 1;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Pending> by_key;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen && !line.empty() && line[0] == '#') {
            std::string pragma = trim(line.substr(1));
            if (pragma == "scale=raw") {
                raw_scale = true;
            } else if (pragma == "scale=normalized") {
                raw_scale = false;
            } else {
                throw IoError(origin + ": line " + std::to_string(line_no) + ": unknown pragma '" + line + "'");
            }
            continue;
        }
        if (!header_seen) {
            if (line == kHeader3) {
                columns = 3;
            } else if (line == kHeader4) {
                columns = 4;
            } else if (line == kHeader5) {
                columns = 5;
            } else {
                throw IoError(origin + ": line " + std::to_string(line_no) + ": bad header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (static_cast<int>(fields.size()) != columns) {
            throw IoError(origin + ": line " + std::to_string(line_no) + ": expected " +
                          std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
        }
        auto read_optional = [&](int idx) -> std::optional<Scalar> {
            if (columns <= idx || fields[idx].empty()) return std::nullopt;
            Scalar v = parse_scalar(fields[idx], "score", line_no);
            return raw_scale ? normalize_raw(v) : v;
        };
        Scalar valence = parse_scalar(fields[2], "valence", line_no);
        if (raw_scale) valence = normalize_raw(valence);
        LexiconEntry entry;
        try {
            entry = LexiconEntry::make(fields[0], fields[1], valence, read_optional(3), read_optional(4));
        } catch (const ValidationError& e) {
            throw IoError(origin + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        auto key = entry.key();
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            order.push_back(key);
            by_key.emplace(std::move(key), Pending{std::move(entry)});
            continue;
        }
        if (!duplicate_policy) {
            throw IoError(origin + ": line " + std::to_string(line_no) + ": duplicate key (" +
                          entry.word + ", " + entry.lang + ")");
        }
        switch (*duplicate_policy) {
            case MergePolicy::error:
                throw IoError(origin + ": line " + std::to_string(line_no) + ": duplicate key (" +
                              entry.word + ", " + entry.lang + ")");
            case MergePolicy::keep_first:
                break;
            case MergePolicy::mean: {
                auto& slot = it->second;
                // Running mean over all occurrences, not pairwise.
                slot.entry.valence =
                    (slot.entry.valence * slot.count + entry.valence) / static_cast<Scalar>(slot.count + 1);
                slot.entry.arousal = resolve_mean(slot.entry.arousal, entry.arousal);
                slot.entry.dominance = resolve_mean(slot.entry.dominance, entry.dominance);
                slot.count += 1;
                break;
            }
        }
    }
    if (!header_seen) throw IoError(origin + ": missing header line");

    ValenceLexicon lexicon;
    for (const auto& key : order) lexicon.add(std::move(by_key.at(key).entry));
    return lexicon;
}

ValenceLexicon load_lexicon(const std::filesystem::path& path, std::optional<MergePolicy> duplicate_policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return lexicon_from_tsv(buf.str(), duplicate_policy, path.string());
}

ValenceLexicon merge_lexicons(const ValenceLexicon& a, const ValenceLexicon& b, MergePolicy policy) {
    std::vector<std::string> order;
    std::unordered_map<std::string, LexiconEntry> by_key;
    for (const auto& e : a.entries()) {
        order.push_back(e.key());
        by_key.emplace(e.key(), e);
    }
    std::vector<std::string> collisions;
    for (const auto& e : b.entries()) {
        auto it = by_key.find(e.key());
        if (it == by_key.end()) {
            order.push_back(e.key());
            by_key.emplace(e.key(), e);
            continue;
        }
        switch (policy) {
            case MergePolicy::error:
                collisions.push_back("(" + e.word + ", " + e.lang + ")");
                break;
            case MergePolicy::keep_first:
                break;
            case MergePolicy::mean:
                it->second.valence = (it->second.valence + e.valence) / 2.0;
                it->second.arousal = resolve_mean(it->second.arousal, e.arousal);
                it->second.dominance = resolve_mean(it->second.dominance, e.dominance);
                break;
        }
    }
    if (!collisions.empty()) {
        std::string msg = "duplicate keys under error policy:";
        for (const auto& c : collisions) msg += " " + c;
        throw ValidationError(msg);
    }
    ValenceLexicon out;
    for (const auto& key : order) out.add(std::move(by_key.at(key)));
    return out;
}

}  // namespace valex
