#include "eileen/vectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "eileen/error.hpp"

namespace eileen {

SparseVector::SparseVector(std::vector<Entry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto const& [index, weight] = entries_[i];
        if (!std::isfinite(weight) || weight <= 0.0) {
            throw ValidationError("sparse vector weight at index " + std::to_string(index) +
                                  " must be finite and positive");
        }
        if (i > 0 && entries_[i - 1].first >= index) {
            throw ValidationError("sparse vector indices must be strictly ascending");
        }
    }
}

SparseVector SparseVector::from_unsorted(std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](Entry const& a, Entry const& b) { return a.first < b.first; });
    std::vector<Entry> merged;
    merged.reserve(entries.size());
    for (auto const& e : entries) {
        if (!merged.empty() && merged.back().first == e.first) {
            merged.back().second += e.second;
        } else {
            merged.push_back(e);
        }
    }
    std::erase_if(merged, [](Entry const& e) { return e.second == 0.0; });
    return SparseVector(std::move(merged));
}

double SparseVector::norm() const noexcept {
    double sum = 0.0;
    for (auto const& [_, w] : entries_) {
        sum += w * w;
    }
    return std::sqrt(sum);
}

double SparseVector::dot(SparseVector const& other) const noexcept {
    double sum = 0.0;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    while (a != entries_.end() && b != other.entries_.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

double TopicVector::norm() const noexcept {
    double sum = 0.0;
    for (double v : values) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

bool TopicVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

bool TopicVector::is_finite() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

TopicVector TopicVector::normalized() const {
    double const n = norm();
    TopicVector out{values};
    if (n > 0.0) {
        for (double& v : out.values) {
            v /= n;
        }
    }
    return out;
}

double dot(TopicVector const& a, TopicVector const& b) {
    if (a.size() != b.size()) {
        throw IncompatibleError("topic vectors differ in dimension: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a.values[i] * b.values[i];
    }
    return sum;
}

double cosine_distance(SparseVector const& a, SparseVector const& b) {
    double const na = a.norm();
    double const nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        return 1.0;
    }
    double const cos = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return 1.0 - cos;
}

double cosine_distance(TopicVector const& a, TopicVector const& b) {
    double const na = a.norm();
    double const nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        return 1.0;
    }
    double const cos = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    return 1.0 - cos;
}

int hamming_distance(LshSignature const& a, LshSignature const& b) {
    return std::popcount(a.bits ^ b.bits);
}

}  // namespace eileen
