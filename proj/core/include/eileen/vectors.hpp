#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace eileen {

using TermId = std::uint32_t;
using DocId = std::int64_t;

/// Term-weight vector: strictly ascending indices, finite positive weights.
class SparseVector {
  public:
    using Entry = std::pair<TermId, double>;

    SparseVector() = default;

    /// Validates the invariants and throws ValidationError on violation.
    explicit SparseVector(std::vector<Entry> entries);

    /// Sorts, merges duplicate indices by summing, and drops zero weights.
    static SparseVector from_unsorted(std::vector<Entry> entries);

    [[nodiscard]] std::span<Entry const> entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

    [[nodiscard]] double norm() const noexcept;
    [[nodiscard]] double dot(SparseVector const& other) const noexcept;

    friend bool operator==(SparseVector const&, SparseVector const&) = default;

  private:
    std::vector<Entry> entries_;
};

/// Dense latent-topic vector of length k.
struct TopicVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double norm() const noexcept;
    [[nodiscard]] bool is_zero() const noexcept;
    [[nodiscard]] bool is_finite() const noexcept;
    /// Unit-norm copy; the zero vector stays zero.
    [[nodiscard]] TopicVector normalized() const;

    static TopicVector zeros(std::size_t k) { return TopicVector{std::vector<double>(k, 0.0)}; }

    friend bool operator==(TopicVector const&, TopicVector const&) = default;
};

double dot(TopicVector const& a, TopicVector const& b);

/// 1 - cos(a, b). A zero operand gives 1 (maximally dissimilar).
double cosine_distance(SparseVector const& a, SparseVector const& b);
double cosine_distance(TopicVector const& a, TopicVector const& b);

/// Random-hyperplane signature of a normalised topic vector.
struct LshSignature {
    std::uint64_t bits = 0;
    std::uint32_t n_planes = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] bool bit(std::uint32_t i) const noexcept { return ((bits >> i) & 1U) != 0; }

    friend bool operator==(LshSignature const&, LshSignature const&) = default;
};

int hamming_distance(LshSignature const& a, LshSignature const& b);

}  // namespace eileen
