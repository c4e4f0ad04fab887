#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ebd {

/// Square boolean matrix stored as packed 64-bit rows.
class BitMatrix {
public:
    using word_type = std::uint64_t;
    static constexpr std::size_t word_bits = 64;

    BitMatrix() = default;
    explicit BitMatrix(std::size_t n)
        : n_(n), words_(words_for(n)), bits_(n * words_for(n), 0) {}

    static constexpr std::size_t words_for(std::size_t n) noexcept {
        return (n + word_bits - 1) / word_bits;
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t words_per_row() const noexcept { return words_; }

    bool test(std::size_t r, std::size_t c) const noexcept {
        return (bits_[r * words_ + c / word_bits] >> (c % word_bits)) & 1u;
    }
    void set(std::size_t r, std::size_t c) noexcept {
        bits_[r * words_ + c / word_bits] |= word_type{1} << (c % word_bits);
    }
    void reset(std::size_t r, std::size_t c) noexcept {
        bits_[r * words_ + c / word_bits] &= ~(word_type{1} << (c % word_bits));
    }

    std::span<word_type> row(std::size_t r) noexcept {
        return {bits_.data() + r * words_, words_};
    }
    std::span<const word_type> row(std::size_t r) const noexcept {
        return {bits_.data() + r * words_, words_};
    }

    std::size_t row_count(std::size_t r) const noexcept {
        std::size_t total = 0;
        for (word_type w : row(r)) total += static_cast<std::size_t>(std::popcount(w));
        return total;
    }
    std::size_t count() const noexcept {
        std::size_t total = 0;
        for (word_type w : bits_) total += static_cast<std::size_t>(std::popcount(w));
        return total;
    }

    void clear_row(std::size_t r) noexcept {
        for (word_type& w : row(r)) w = 0;
    }

    /// Calls f(c) for every set column c of row r, in increasing order.
    template <class F>
    void for_each_in_row(std::size_t r, F&& f) const {
        auto words = row(r);
        for (std::size_t k = 0; k < words.size(); ++k) {
            word_type w = words[k];
            while (w != 0) {
                const auto bit = static_cast<std::size_t>(std::countr_zero(w));
                f(k * word_bits + bit);
                w &= w - 1;
            }
        }
    }

    /// Mask with the low n bits of each word set (the valid columns).
    word_type tail_mask(std::size_t k) const noexcept {
        const std::size_t rem = n_ - k * word_bits;
        return rem >= word_bits ? ~word_type{0} : ((word_type{1} << rem) - 1);
    }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t words_ = 0;
    std::vector<word_type> bits_;
};

}  // namespace ebd
