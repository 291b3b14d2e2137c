#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eileen/corpus.hpp"
#include "eileen/vectors.hpp"

namespace eileen {

/// Truncated SVD of the document-term tf-idf matrix A = U S V^T.
///
/// term_projection holds V (n_terms x k, row-major), so a document's topic
/// vector is V^T x. Columns are sign-normalised so that each column's entry
/// of largest magnitude is positive, which makes fits reproducible.
struct LsaModel {
    std::size_t k = 0;
    std::size_t n_terms = 0;
    std::vector<double> singular_values;
    std::vector<double> term_projection;
    std::uint64_t vocab_fingerprint = 0;
    std::uint32_t lsh_planes = 16;
    std::uint64_t lsh_seed = 0;

    [[nodiscard]] double projection(std::size_t term, std::size_t component) const {
        return term_projection[term * k + component];
    }

    /// Versioned little-endian binary artifact.
    void save(std::filesystem::path const& path) const;
    static LsaModel load(std::filesystem::path const& path);

    friend bool operator==(LsaModel const&, LsaModel const&) = default;
};

enum class SvdMethod { automatic, dense, randomized };

struct LsaOptions {
    SvdMethod method = SvdMethod::automatic;
    /// Seed of the Gaussian test matrix used by the randomized solver.
    std::uint64_t seed = 0;
    int power_iterations = 8;
    int oversample = 20;
    /// automatic picks the dense solver up to this many matrix cells.
    std::size_t dense_cell_limit = 4'000'000;
};

/// Throws DomainError when k is outside [1, min(#docs, #terms)] or the
/// matrix has no non-zero entry.
LsaModel fit_lsa(std::span<SparseVector const> rows, std::size_t n_terms, std::size_t k,
                 std::uint64_t vocab_fingerprint, LsaOptions const& options = {});

/// V^T v, optionally scaled to unit norm. Throws IncompatibleError when the
/// vector was built against a different vocabulary.
TopicVector project(SparseVector const& v, LsaModel const& model, std::uint64_t vocab_fingerprint,
                    bool normalize);

/// Seeded Gaussian hyperplanes; bit i is set when <t, h_i> >= 0.
class LshFamily {
  public:
    LshFamily(std::size_t dimension, std::uint32_t n_planes, std::uint64_t seed);

    /// The zero vector maps to the all-zeros signature.
    [[nodiscard]] LshSignature sign(TopicVector const& t) const;

    [[nodiscard]] std::uint32_t n_planes() const noexcept { return n_planes_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  private:
    std::size_t dimension_;
    std::uint32_t n_planes_;
    std::uint64_t seed_;
    std::vector<double> planes_;
};

LshSignature lsh_signature(TopicVector const& t, std::uint32_t n_planes, std::uint64_t seed);

/// Ids of documents whose signature is within max_hamming of the query.
/// Throws IncompatibleError if any document lacks a signature or uses a
/// different seed or plane count.
std::vector<DocId> candidate_neighbors(LshSignature const& query, std::span<DocumentRecord const> docs,
                                       int max_hamming);

}  // namespace eileen
