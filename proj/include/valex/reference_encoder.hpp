#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "valex/encoder.hpp"
#include "valex/rng.hpp"

namespace valex {

// Self-contained EncoderBackend: whitespace tokens plus character-3-gram
// subword units over a 32-dimensional embedding table and a linear head,
// trained by plain mini-batch gradient descent. Known words pool their word
// row together with their 3-gram rows; unknown words fall back to 3-grams
// alone (hash buckets when even the gram is new). Deterministic per seed, so
// the whole pipeline runs and tests without any external model weights.
class ReferenceEncoder final : public EncoderBackend {
public:
    static constexpr int kDefaultDim = 32;
    static constexpr int kOovBuckets = 64;  // reserved hash rows so no token can miss

    explicit ReferenceEncoder(std::uint64_t seed, int dim = kDefaultDim);

    int output_dim() const override { return static_cast<int>(head_w_.rows()); }
    void configure_head(int k) override;

    std::vector<int> tokenize(const std::string& text) const override;
    Vector forward(const std::string& text, RunMode mode) override;
    Scalar train_step(std::span<const TrainExample> batch, Objective objective,
                      const TrainConfig& config) override;
    Scalar batch_loss(std::span<const TrainExample> batch, Objective objective) const override;
    void prepare(std::span<const TrainExample> train, const TrainConfig& config) override;
    void set_max_tokens(int n) override;

    std::vector<Scalar> parameters() const override;
    void set_parameters(const std::vector<Scalar>& flat) override;
    nlohmann::json state() const override;
    void load_state(const nlohmann::json& j) override;
    std::string kind() const override { return "reference"; }
    std::unique_ptr<EncoderBackend> clone() const override;

    // Loss and analytic gradients with no update and no dropout; the object
    // the finite-difference checks compare against.
    struct Gradients {
        Matrix head_w;
        Vector head_b;
        std::unordered_map<int, Vector> embedding_rows;
    };
    std::pair<Scalar, Gradients> loss_and_gradients(std::span<const TrainExample> batch,
                                                    Objective objective) const;

    // Direct access for tests and the checkpoint code.
    Matrix& embedding_table() { return embedding_; }
    const Matrix& embedding_table() const { return embedding_; }
    Matrix& head_weight() { return head_w_; }
    Vector& head_bias() { return head_b_; }
    int dim() const { return dim_; }
    int max_tokens() const { return max_tokens_; }
    std::size_t vocab_size() const { return vocab_order_.size(); }
    std::uint64_t seed() const { return seed_; }

private:
    Vector pooled(const std::vector<int>& ids) const;
    int row_of(const std::string& token) const;  // -1 when absent
    int bucket_of(const std::string& gram) const;
    std::vector<std::string> grams_of(const std::string& token) const;
    Vector fresh_row();

    int dim_;
    int max_tokens_ = 10;
    Scalar dropout_ = 0.2;
    std::uint64_t seed_;
    Rng init_rng_;   // consumed by weight initialization, in vocabulary order
    Rng train_rng_;  // consumed by dropout masks
    std::unordered_map<std::string, int> vocab_;  // token -> embedding row (>= kOovBuckets)
    std::vector<std::string> vocab_order_;        // row - kOovBuckets -> token
    Matrix embedding_;                            // (kOovBuckets + |vocab|) x dim
    Matrix head_w_;                               // K x dim
    Vector head_b_;                               // K
};

}  // namespace valex
