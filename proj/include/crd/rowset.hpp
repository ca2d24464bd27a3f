#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace crd {

// Fixed-universe bit set over row indices 0..n-1. The search spends nearly
// all of its time in and_count / intersect, so these stay branch-free over
// whole words.
class RowSet {
public:
    RowSet() = default;
    explicit RowSet(std::size_t n, bool full = false)
        : n_(n), words_((n + 63) / 64, full ? ~0ull : 0ull) {
        if (full) trim_tail();
    }

    std::size_t universe_size() const { return n_; }

    void set(std::size_t i) { words_[i >> 6] |= 1ull << (i & 63); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

    std::size_t count() const {
        std::size_t c = 0;
        for (uint64_t w : words_) c += std::popcount(w);
        return c;
    }

    std::size_t and_count(const RowSet& other) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += std::popcount(words_[i] & other.words_[i]);
        return c;
    }

    static std::size_t and3_count(const RowSet& a, const RowSet& b, const RowSet& c) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < a.words_.size(); ++i)
            n += std::popcount(a.words_[i] & b.words_[i] & c.words_[i]);
        return n;
    }

    static RowSet intersect(const RowSet& a, const RowSet& b) {
        RowSet r(a.n_);
        for (std::size_t i = 0; i < r.words_.size(); ++i)
            r.words_[i] = a.words_[i] & b.words_[i];
        return r;
    }

    RowSet& operator&=(const RowSet& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
        return *this;
    }

    bool operator==(const RowSet& other) const {
        return n_ == other.n_ && words_ == other.words_;
    }

    // Calls f(row) for every set bit in ascending order.
    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            uint64_t w = words_[wi];
            while (w) {
                f(wi * 64 + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

    std::vector<std::size_t> to_indices() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for_each([&](std::size_t i) { out.push_back(i); });
        return out;
    }

private:
    void trim_tail() {
        const std::size_t rem = n_ & 63;
        if (rem && !words_.empty()) words_.back() &= (1ull << rem) - 1;
    }

    std::size_t n_ = 0;
    std::vector<uint64_t> words_;
};

}  // namespace crd
