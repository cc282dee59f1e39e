#pragma once

// Shared test utilities: independent oracles (central finite differences,
// closed-form least squares on pooled bag-of-token features) and toy data
// builders. Everything here is deliberately implementation-agnostic so the
// production gradient/training code is checked against a separate route.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "valex/lexicon.hpp"
#include "valex/reference_encoder.hpp"
#include "valex/rng.hpp"

namespace valex_test {

using valex::Matrix;
using valex::Scalar;
using valex::Vector;

// Central finite-difference gradient of the batch loss with respect to every
// flat parameter.
inline std::vector<Scalar> finite_difference_gradient(valex::ReferenceEncoder& encoder,
                                                      std::span<const valex::TrainExample> batch,
                                                      valex::Objective objective, Scalar h = 1e-6) {
    auto params = encoder.parameters();
    std::vector<Scalar> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params;
        plus[i] += h;
        encoder.set_parameters(plus);
        Scalar up = encoder.batch_loss(batch, objective);
        auto minus = params;
        minus[i] -= h;
        encoder.set_parameters(minus);
        Scalar down = encoder.batch_loss(batch, objective);
        grad[i] = (up - down) / (2 * h);
    }
    encoder.set_parameters(params);
    return grad;
}

// Flattens analytic gradients into the parameters() layout (embedding rows,
// head weight rows, head bias).
inline std::vector<Scalar> flatten_gradients(const valex::ReferenceEncoder& encoder,
                                             const valex::ReferenceEncoder::Gradients& g) {
    const int dim = encoder.dim();
    const auto rows = encoder.embedding_table().rows();
    std::vector<Scalar> flat;
    for (Eigen::Index r = 0; r < rows; ++r) {
        auto it = g.embedding_rows.find(static_cast<int>(r));
        for (int c = 0; c < dim; ++c) flat.push_back(it == g.embedding_rows.end() ? 0.0 : it->second(c));
    }
    for (Eigen::Index r = 0; r < g.head_w.rows(); ++r) {
        for (int c = 0; c < dim; ++c) flat.push_back(g.head_w(r, c));
    }
    for (Eigen::Index r = 0; r < g.head_b.size(); ++r) flat.push_back(g.head_b(r));
    return flat;
}

inline Scalar max_relative_error(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
    Scalar worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        Scalar denom = std::max({std::abs(a[i]), std::abs(b[i]), Scalar(1e-6)});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

// Closed-form least squares over pooled bag-of-token features: each text is
// the mean of one-hot token vectors over the training vocabulary, plus a bias
// column. Whitespace tokenization, no backoff.
class PooledLeastSquares {
public:
    void fit(const std::vector<std::pair<std::string, Scalar>>& data) {
        for (const auto& [text, target] : data) {
            for (const auto& token : split(text)) {
                if (!index_.count(token)) {
                    index_.emplace(token, static_cast<int>(index_.size()));
                }
            }
        }
        Matrix x(data.size(), index_.size() + 1);
        Vector y(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = featurize(data[i].first).transpose();
            y(static_cast<Eigen::Index>(i)) = data[i].second;
        }
        weights_ = x.colPivHouseholderQr().solve(y);
        train_mse_ = (x * weights_ - y).squaredNorm() / static_cast<Scalar>(data.size());
    }

    Scalar predict(const std::string& text) const { return featurize(text).dot(weights_); }
    Scalar train_mse() const { return train_mse_; }

private:
    static std::vector<std::string> split(const std::string& text) {
        std::vector<std::string> tokens;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && text[i] == ' ') ++i;
            std::size_t start = i;
            while (i < text.size() && text[i] != ' ') ++i;
            if (i > start) tokens.push_back(text.substr(start, i - start));
        }
        return tokens;
    }

    Vector featurize(const std::string& text) const {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(index_.size()) + 1);
        auto tokens = split(text);
        for (const auto& token : tokens) {
            auto it = index_.find(token);
            if (it != index_.end()) v(it->second) += 1.0 / static_cast<Scalar>(tokens.size());
        }
        v(static_cast<Eigen::Index>(index_.size())) = 1.0;  // bias
        return v;
    }

    std::map<std::string, int> index_;
    Vector weights_;
    Scalar train_mse_ = 0;
};

// Twenty clearly polar words, two synthetic languages, memorizable by design.
inline valex::ValenceLexicon toy_lexicon() {
    valex::ValenceLexicon lex;
    const std::pair<const char*, double> words[] = {
        {"good", 4.0},   {"great", 4.5}, {"fine", 1.5},   {"warm", 2.5},   {"bright", 3.5},
        {"bad", -4.0},   {"awful", -4.5}, {"cold", -1.5}, {"dark", -2.5},  {"cruel", -3.5},
    };
    for (const auto& [word, valence] : words) {
        lex.add(valex::LexiconEntry::make(word, "en", valence));
        lex.add(valex::LexiconEntry::make(std::string(word) + "ku", "id", valence));
    }
    return lex;
}

}  // namespace valex_test
