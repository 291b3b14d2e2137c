#include "eileen/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "eileen/error.hpp"
#include "eileen/rng.hpp"

namespace eileen {

namespace {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Factors {
    Eigen::VectorXd values;
    Matrix right;  // n_terms x r
};

Factors dense_svd(SparseMatrix const& a) {
    Matrix const dense(a);
    Eigen::BDCSVD<Matrix> svd(dense, Eigen::ComputeThinV);
    return {svd.singularValues(), svd.matrixV()};
}

Matrix orthonormal_basis(Matrix const& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

// Randomized range finder with subspace iteration (Halko, Martinsson, Tropp).
Factors randomized_svd(SparseMatrix const& a, std::size_t k, LsaOptions const& options) {
    auto const n = static_cast<Eigen::Index>(a.cols());
    auto const m = static_cast<Eigen::Index>(a.rows());
    Eigen::Index const l =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(k) + options.oversample, std::min(m, n));
    Rng rng(options.seed);
    Matrix omega(n, l);
    for (Eigen::Index j = 0; j < l; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = rng.normal();
    }
    SparseMatrix const at = a.transpose();
    Matrix q = orthonormal_basis(a * omega);
    for (int it = 0; it < options.power_iterations; ++it) {
        Matrix const z = orthonormal_basis(at * q);
        q = orthonormal_basis(a * z);
    }
    Matrix const b = (at * q).transpose();  // l x n
    Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinV);
    return {svd.singularValues(), svd.matrixV()};
}

template <typename T>
void write_pod(std::ostream& out, T const& value) {
    out.write(reinterpret_cast<char const*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("truncated LSA artifact");
    return value;
}

constexpr char kMagic[8] = {'E', 'I', 'L', 'S', 'A', '0', '0', '1'};

}  // namespace

LsaModel fit_lsa(std::span<SparseVector const> rows, std::size_t n_terms, std::size_t k,
                 std::uint64_t vocab_fingerprint, LsaOptions const& options) {
    if (rows.empty() || n_terms == 0) throw DomainError("LSA needs a non-empty matrix");
    std::size_t const max_k = std::min(rows.size(), n_terms);
    if (k < 1 || k > max_k) {
        throw DomainError("LSA rank k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(max_k) + "]");
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (auto const& [term, weight] : rows[r].entries()) {
            if (term >= n_terms) {
                throw IncompatibleError("term index " + std::to_string(term) +
                                        " outside vocabulary of size " + std::to_string(n_terms));
            }
            triplets.emplace_back(static_cast<int>(r), static_cast<int>(term), weight);
        }
    }
    if (triplets.empty()) throw DomainError("LSA matrix is all zeros");
    SparseMatrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_terms));
    a.setFromTriplets(triplets.begin(), triplets.end());

    SvdMethod method = options.method;
    if (method == SvdMethod::automatic) {
        method = rows.size() * n_terms <= options.dense_cell_limit ? SvdMethod::dense
                                                                    : SvdMethod::randomized;
    }
    Factors const f = method == SvdMethod::dense ? dense_svd(a) : randomized_svd(a, k, options);

    LsaModel model;
    model.k = k;
    model.n_terms = n_terms;
    model.vocab_fingerprint = vocab_fingerprint;
    model.singular_values.resize(k);
    model.term_projection.assign(n_terms * k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        model.singular_values[c] = std::max(0.0, f.values(static_cast<Eigen::Index>(c)));
        auto col = f.right.col(static_cast<Eigen::Index>(c));
        Eigen::Index pivot = 0;
        col.cwiseAbs().maxCoeff(&pivot);
        double const sign = col(pivot) < 0.0 ? -1.0 : 1.0;
        for (std::size_t t = 0; t < n_terms; ++t) {
            model.term_projection[t * k + c] = sign * col(static_cast<Eigen::Index>(t));
        }
    }
    return model;
}

TopicVector project(SparseVector const& v, LsaModel const& model, std::uint64_t vocab_fingerprint,
                    bool normalize) {
    if (vocab_fingerprint != model.vocab_fingerprint) {
        throw IncompatibleError("vector vocabulary does not match the LSA model's vocabulary");
    }
    TopicVector out = TopicVector::zeros(model.k);
    for (auto const& [term, weight] : v.entries()) {
        if (term >= model.n_terms) {
            throw IncompatibleError("term index outside the LSA model");
        }
        double const* row = &model.term_projection[term * model.k];
        for (std::size_t c = 0; c < model.k; ++c) out.values[c] += weight * row[c];
    }
    return normalize ? out.normalized() : out;
}

void LsaModel::save(std::filesystem::path const& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write LSA model " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint64_t>(out, k);
    write_pod<std::uint64_t>(out, n_terms);
    write_pod<std::uint64_t>(out, vocab_fingerprint);
    write_pod<std::uint32_t>(out, lsh_planes);
    write_pod<std::uint64_t>(out, lsh_seed);
    out.write(reinterpret_cast<char const*>(singular_values.data()),
              static_cast<std::streamsize>(singular_values.size() * sizeof(double)));
    out.write(reinterpret_cast<char const*>(term_projection.data()),
              static_cast<std::streamsize>(term_projection.size() * sizeof(double)));
    if (!out) throw IoError("error while writing " + path.string());
}

LsaModel LsaModel::load(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read LSA model " + path.string());
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path.string() + " is not a version 1 LSA artifact");
    }
    LsaModel m;
    m.k = read_pod<std::uint64_t>(in);
    m.n_terms = read_pod<std::uint64_t>(in);
    m.vocab_fingerprint = read_pod<std::uint64_t>(in);
    m.lsh_planes = read_pod<std::uint32_t>(in);
    m.lsh_seed = read_pod<std::uint64_t>(in);
    if (m.k == 0 || m.n_terms == 0 || m.k > m.n_terms || m.n_terms > (1ULL << 32)) {
        throw FormatError(path.string() + ": implausible LSA dimensions");
    }
    m.singular_values.resize(m.k);
    m.term_projection.resize(m.k * m.n_terms);
    in.read(reinterpret_cast<char*>(m.singular_values.data()),
            static_cast<std::streamsize>(m.k * sizeof(double)));
    in.read(reinterpret_cast<char*>(m.term_projection.data()),
            static_cast<std::streamsize>(m.term_projection.size() * sizeof(double)));
    if (!in) throw FormatError("truncated LSA artifact " + path.string());
    return m;
}

// ---------------------------------------------------------------------------

LshFamily::LshFamily(std::size_t dimension, std::uint32_t n_planes, std::uint64_t seed)
    : dimension_(dimension), n_planes_(n_planes), seed_(seed) {
    if (n_planes < 1 || n_planes > 64) throw DomainError("LSH plane count must be in [1, 64]");
    Rng rng(seed);
    planes_.resize(static_cast<std::size_t>(n_planes) * dimension);
    for (double& x : planes_) x = rng.normal();
}

LshSignature LshFamily::sign(TopicVector const& t) const {
    if (t.size() != dimension_) {
        throw IncompatibleError("topic vector dimension does not match the LSH family");
    }
    LshSignature sig{0, n_planes_, seed_};
    if (t.is_zero()) return sig;
    for (std::uint32_t p = 0; p < n_planes_; ++p) {
        double const* h = &planes_[p * dimension_];
        double s = 0.0;
        for (std::size_t i = 0; i < dimension_; ++i) s += h[i] * t.values[i];
        if (s >= 0.0) sig.bits |= (std::uint64_t{1} << p);
    }
    return sig;
}

LshSignature lsh_signature(TopicVector const& t, std::uint32_t n_planes, std::uint64_t seed) {
    return LshFamily(t.size(), n_planes, seed).sign(t);
}

std::vector<DocId> candidate_neighbors(LshSignature const& query, std::span<DocumentRecord const> docs,
                                       int max_hamming) {
    std::vector<DocId> out;
    for (auto const& doc : docs) {
        if (!doc.buckets) {
            throw IncompatibleError("document " + std::to_string(doc.id) + " has no LSH signature");
        }
        if (doc.buckets->seed != query.seed || doc.buckets->n_planes != query.n_planes) {
            throw IncompatibleError("document " + std::to_string(doc.id) +
                                    " was hashed with a different seed or plane count");
        }
        if (hamming_distance(*doc.buckets, query) <= max_hamming) out.push_back(doc.id);
    }
    return out;
}

}  // namespace eileen
