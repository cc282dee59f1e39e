#include "valex/reference_encoder.hpp"

#include <cmath>

#include "valex/error.hpp"

namespace valex {

namespace {

constexpr Scalar kInitRange = 0.05;

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

}  // namespace

ReferenceEncoder::ReferenceEncoder(std::uint64_t seed, int dim)
    : dim_(dim), seed_(seed), init_rng_(seed), train_rng_(fnv1a64(seed)) {
    if (dim < 1) throw ValidationError("embedding dimension must be positive");
    embedding_.resize(kOovBuckets, dim_);
    for (int r = 0; r < kOovBuckets; ++r) embedding_.row(r) = fresh_row().transpose();
    configure_head(1);
}

Vector ReferenceEncoder::fresh_row() {
    Vector row(dim_);
    for (int i = 0; i < dim_; ++i) row(i) = init_rng_.next_double(-kInitRange, kInitRange);
    return row;
}

void ReferenceEncoder::configure_head(int k) {
    if (k < 1) throw ValidationError("head width must be positive");
    head_w_.resize(k, dim_);
    head_b_.resize(k);
    for (int r = 0; r < k; ++r) head_w_.row(r) = fresh_row().transpose();
    for (int r = 0; r < k; ++r) head_b_(r) = init_rng_.next_double(-kInitRange, kInitRange);
}

int ReferenceEncoder::row_of(const std::string& token) const {
    auto it = vocab_.find(token);
    return it == vocab_.end() ? -1 : it->second;
}

int ReferenceEncoder::bucket_of(const std::string& gram) const {
    return static_cast<int>(fnv1a64(gram) % kOovBuckets);
}

std::vector<std::string> ReferenceEncoder::grams_of(const std::string& token) const {
    // Character 3-grams over bytes; short tokens back off to themselves.
    if (token.size() <= 3) return {token};
    std::vector<std::string> grams;
    grams.reserve(token.size() - 2);
    for (std::size_t i = 0; i + 3 <= token.size(); ++i) grams.push_back(token.substr(i, 3));
    return grams;
}

std::vector<int> ReferenceEncoder::tokenize(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& token : whitespace_tokens(text)) {
        int row = row_of(token);
        if (row >= 0) {
            ids.push_back(row);
            if (token.size() <= 3) continue;  // the token is its only 3-gram
        }
        // Subword units ride along with known words and are all an unknown
        // word has. Training a word therefore also trains its 3-gram rows,
        // which is what lets held-out words share signal.
        for (const auto& gram : grams_of(token)) {
            int gram_row = row_of(gram);
            ids.push_back(gram_row >= 0 ? gram_row : bucket_of(gram));
        }
    }
    return ids;
}

Vector ReferenceEncoder::pooled(const std::vector<int>& ids) const {
    std::size_t n = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(max_tokens_));
    Vector x = Vector::Zero(dim_);
    for (std::size_t i = 0; i < n; ++i) x += embedding_.row(ids[i]).transpose();
    return x / static_cast<Scalar>(n);
}

Vector ReferenceEncoder::forward(const std::string& text, RunMode mode) {
    auto ids = tokenize(text);
    if (ids.empty()) throw ValidationError("input tokenizes to zero tokens: '" + text + "'");
    Vector x = pooled(ids);
    if (mode == RunMode::train && dropout_ > 0) {
        Scalar keep = 1.0 - dropout_;
        for (int i = 0; i < dim_; ++i) {
            x(i) = train_rng_.next_double() < keep ? x(i) / keep : 0.0;
        }
    }
    return head_w_ * x + head_b_;
}

void ReferenceEncoder::set_max_tokens(int n) {
    if (n < 1) throw ValidationError("max tokens must be positive");
    max_tokens_ = n;
}

void ReferenceEncoder::prepare(std::span<const TrainExample> train, const TrainConfig& config) {
    config.validate();
    max_tokens_ = config.max_tokens;
    dropout_ = config.dropout;

    std::vector<std::string> fresh;
    auto note = [&](const std::string& token) {
        if (!vocab_.count(token)) {
            vocab_.emplace(token, kOovBuckets + static_cast<int>(vocab_order_.size()) +
                                      static_cast<int>(fresh.size()));
            fresh.push_back(token);
        }
    };
    for (const auto& example : train) {
        for (const auto& token : whitespace_tokens(example.text)) {
            note(token);
            for (const auto& gram : grams_of(token)) note(gram);
        }
    }
    if (fresh.empty()) return;

    Eigen::Index old_rows = embedding_.rows();
    embedding_.conservativeResize(old_rows + static_cast<Eigen::Index>(fresh.size()), dim_);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
        embedding_.row(old_rows + static_cast<Eigen::Index>(i)) = fresh_row().transpose();
        vocab_order_.push_back(fresh[i]);
    }
}


std::pair<Scalar, ReferenceEncoder::Gradients> ReferenceEncoder::loss_and_gradients(
    std::span<const TrainExample> batch, Objective objective) const {
    if (batch.empty()) throw ValidationError("empty batch");
    const int k = output_dim();
    if (objective == Objective::mse && k != 1) {
        throw ValidationError("mse objective requires a 1-output head, got " + std::to_string(k));
    }
    if (objective == Objective::cross_entropy && k < 2) {
        throw ValidationError("cross-entropy objective requires at least 2 outputs");
    }

    Gradients g;
    g.head_w = Matrix::Zero(k, dim_);
    g.head_b = Vector::Zero(k);
    const Scalar inv_b = 1.0 / static_cast<Scalar>(batch.size());
    Scalar loss = 0;

    for (const auto& example : batch) {
        auto ids = tokenize(example.text);
        if (ids.empty()) throw ValidationError("input tokenizes to zero tokens: '" + example.text + "'");
        std::size_t n = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(max_tokens_));
        Vector x = pooled(ids);
        Vector z = head_w_ * x + head_b_;

        Vector dz(k);
        if (objective == Objective::mse) {
            Scalar err = z(0) - example.target;
            loss += err * err * inv_b;
            dz(0) = 2.0 * err * inv_b;
        } else {
            Scalar idx_real = example.target;
            int label = static_cast<int>(idx_real);
            if (static_cast<Scalar>(label) != idx_real || label < 0 || label >= k) {
                throw ValidationError("class index " + std::to_string(idx_real) + " invalid for " +
                                      std::to_string(k) + "-way head");
            }
            loss += -log_softmax_at(z, label) * inv_b;
            dz = softmax(z) * inv_b;
            dz(label) -= inv_b;
        }

        g.head_w += dz * x.transpose();
        g.head_b += dz;
        Vector dx = head_w_.transpose() * dz / static_cast<Scalar>(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = g.embedding_rows.try_emplace(ids[i], Vector::Zero(dim_));
            it->second += dx;
        }
    }
    return {loss, std::move(g)};
}

Scalar ReferenceEncoder::train_step(std::span<const TrainExample> batch, Objective objective,
                                    const TrainConfig& config) {
    config.validate();
    max_tokens_ = config.max_tokens;
    dropout_ = config.dropout;
    if (batch.empty()) throw ValidationError("empty batch");
    const int k = output_dim();
    if (objective == Objective::mse && k != 1) {
        throw ValidationError("mse objective requires a 1-output head, got " + std::to_string(k));
    }
    if (objective == Objective::cross_entropy && k < 2) {
        throw ValidationError("cross-entropy objective requires at least 2 outputs");
    }

    Matrix g_w = Matrix::Zero(k, dim_);
    Vector g_b = Vector::Zero(k);
    std::unordered_map<int, Vector> g_rows;
    const Scalar inv_b = 1.0 / static_cast<Scalar>(batch.size());
    const Scalar keep = 1.0 - dropout_;
    Scalar loss = 0;

    for (const auto& example : batch) {
        auto ids = tokenize(example.text);
        if (ids.empty()) throw ValidationError("input tokenizes to zero tokens: '" + example.text + "'");
        std::size_t n = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(max_tokens_));
        Vector x = pooled(ids);

        Vector mask = Vector::Ones(dim_);
        if (dropout_ > 0) {
            for (int i = 0; i < dim_; ++i) {
                mask(i) = train_rng_.next_double() < keep ? 1.0 / keep : 0.0;
            }
        }
        Vector xd = x.cwiseProduct(mask);
        Vector z = head_w_ * xd + head_b_;

        Vector dz(k);
        if (objective == Objective::mse) {
            Scalar err = z(0) - example.target;
            loss += err * err * inv_b;
            dz(0) = 2.0 * err * inv_b;
        } else {
            Scalar idx_real = example.target;
            int label = static_cast<int>(idx_real);
            if (static_cast<Scalar>(label) != idx_real || label < 0 || label >= k) {
                throw ValidationError("class index " + std::to_string(idx_real) + " invalid for " +
                                      std::to_string(k) + "-way head");
            }
            loss += -log_softmax_at(z, label) * inv_b;
            dz = softmax(z) * inv_b;
            dz(label) -= inv_b;
        }

        g_w += dz * xd.transpose();
        g_b += dz;
        Vector dx = (head_w_.transpose() * dz).cwiseProduct(mask) / static_cast<Scalar>(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = g_rows.try_emplace(ids[i], Vector::Zero(dim_));
            it->second += dx;
        }
    }

    if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss " + std::to_string(loss));
    }

    head_w_ -= config.learning_rate * g_w;
    head_b_ -= config.learning_rate * g_b;
    for (const auto& [row, grad] : g_rows) {
        embedding_.row(row) -= config.learning_rate * grad.transpose();
    }
    return loss;
}

Scalar ReferenceEncoder::batch_loss(std::span<const TrainExample> batch, Objective objective) const {
    if (batch.empty()) throw ValidationError("empty batch");
    const int k = output_dim();
    if (objective == Objective::mse && k != 1) {
        throw ValidationError("mse objective requires a 1-output head, got " + std::to_string(k));
    }
    Scalar loss = 0;
    const Scalar inv_b = 1.0 / static_cast<Scalar>(batch.size());
    for (const auto& example : batch) {
        auto ids = tokenize(example.text);
        if (ids.empty()) throw ValidationError("input tokenizes to zero tokens: '" + example.text + "'");
        Vector z = head_w_ * pooled(ids) + head_b_;
        if (objective == Objective::mse) {
            Scalar err = z(0) - example.target;
            loss += err * err * inv_b;
        } else {
            int label = static_cast<int>(example.target);
            if (static_cast<Scalar>(label) != example.target || label < 0 || label >= k) {
                throw ValidationError("class index " + std::to_string(example.target) + " invalid for " +
                                      std::to_string(k) + "-way head");
            }
            loss += -log_softmax_at(z, label) * inv_b;
        }
    }
    return loss;
}

std::vector<Scalar> ReferenceEncoder::parameters() const {
    std::vector<Scalar> flat;
    flat.reserve(static_cast<std::size_t>(embedding_.size() + head_w_.size() + head_b_.size()));
    for (Eigen::Index r = 0; r < embedding_.rows(); ++r) {
        for (int c = 0; c < dim_; ++c) flat.push_back(embedding_(r, c));
    }
    for (Eigen::Index r = 0; r < head_w_.rows(); ++r) {
        for (int c = 0; c < dim_; ++c) flat.push_back(head_w_(r, c));
    }
    for (Eigen::Index r = 0; r < head_b_.size(); ++r) flat.push_back(head_b_(r));
    return flat;
}

void ReferenceEncoder::set_parameters(const std::vector<Scalar>& flat) {
    std::size_t expected =
        static_cast<std::size_t>(embedding_.size() + head_w_.size() + head_b_.size());
    if (flat.size() != expected) {
        throw ValidationError("parameter vector has " + std::to_string(flat.size()) + " values, expected " +
                              std::to_string(expected));
    }
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < embedding_.rows(); ++r) {
        for (int c = 0; c < dim_; ++c) embedding_(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < head_w_.rows(); ++r) {
        for (int c = 0; c < dim_; ++c) head_w_(r, c) = flat[i++];
    }
    for (Eigen::Index r = 0; r < head_b_.size(); ++r) head_b_(r) = flat[i++];
}

nlohmann::json ReferenceEncoder::state() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["max_tokens"] = max_tokens_;
    j["dropout"] = dropout_;
    j["seed"] = seed_;
    j["vocab"] = vocab_order_;
    auto matrix_to_json = [](const Matrix& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    j["embedding"] = matrix_to_json(embedding_);
    j["head_w"] = matrix_to_json(head_w_);
    j["head_b"] = std::vector<Scalar>(head_b_.data(), head_b_.data() + head_b_.size());
    return j;
}

void ReferenceEncoder::load_state(const nlohmann::json& j) {
    dim_ = j.at("dim").get<int>();
    max_tokens_ = j.at("max_tokens").get<int>();
    dropout_ = j.at("dropout").get<Scalar>();
    seed_ = j.at("seed").get<std::uint64_t>();
    vocab_order_ = j.at("vocab").get<std::vector<std::string>>();
    vocab_.clear();
    for (std::size_t i = 0; i < vocab_order_.size(); ++i) {
        vocab_.emplace(vocab_order_[i], kOovBuckets + static_cast<int>(i));
    }
    auto matrix_from_json = [](const nlohmann::json& rows) {
        if (rows.empty()) return Matrix(0, 0);
        Matrix m(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c].get<Scalar>();
        }
        return m;
    };
    embedding_ = matrix_from_json(j.at("embedding"));
    head_w_ = matrix_from_json(j.at("head_w"));
    auto b = j.at("head_b").get<std::vector<Scalar>>();
    head_b_ = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
    if (embedding_.rows() != static_cast<Eigen::Index>(kOovBuckets + vocab_order_.size()) ||
        embedding_.cols() != dim_) {
        throw ValidationError("checkpoint embedding shape does not match vocabulary");
    }
}

std::unique_ptr<EncoderBackend> ReferenceEncoder::clone() const {
    return std::make_unique<ReferenceEncoder>(*this);
}

}  // namespace valex
