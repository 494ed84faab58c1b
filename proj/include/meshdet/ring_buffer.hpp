#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace meshdet {

// Fixed-capacity FIFO of doubles with rank-order queries over its contents.
class RingBuffer {
public:
    RingBuffer() = default;
    explicit RingBuffer(std::size_t capacity) : data_(capacity) {
        if (capacity == 0) throw std::invalid_argument("ring buffer capacity must be positive");
    }

    void push(double x) {
        data_[head_] = x;
        head_ = (head_ + 1) % data_.size();
        if (size_ < data_.size()) ++size_;
    }

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return data_.size(); }
    bool full() const { return size_ == data_.size(); }
    bool empty() const { return size_ == 0; }

    // Oldest first.
    std::vector<double> values() const {
        std::vector<double> out(size_);
        const std::size_t start = (head_ + data_.size() - size_) % data_.size();
        for (std::size_t i = 0; i < size_; ++i) out[i] = data_[(start + i) % data_.size()];
        return out;
    }

    // Element at 1-based rank r in ascending order.
    double order_statistic(std::size_t rank) const {
        if (rank == 0 || rank > size_) throw std::out_of_range("order statistic rank");
        scratch_.assign(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(size_));
        auto nth = scratch_.begin() + static_cast<std::ptrdiff_t>(rank - 1);
        std::nth_element(scratch_.begin(), nth, scratch_.end());
        return *nth;
    }

    // Even sizes average the two middle elements.
    double median() const {
        if (size_ == 0) throw std::out_of_range("median of empty buffer");
        scratch_.assign(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(size_));
        const std::size_t mid = size_ / 2;
        auto upper = scratch_.begin() + static_cast<std::ptrdiff_t>(mid);
        std::nth_element(scratch_.begin(), upper, scratch_.end());
        if (size_ % 2 == 1) return *upper;
        const double lower = *std::max_element(scratch_.begin(), upper);
        return 0.5 * (lower + *upper);
    }

    double mean() const {
        if (size_ == 0) throw std::out_of_range("mean of empty buffer");
        double acc = 0.0;
        for (std::size_t i = 0; i < size_; ++i) acc += data_[i];
        return acc / static_cast<double>(size_);
    }

    // Raw storage access for serialization.
    const std::vector<double>& raw() const { return data_; }
    std::size_t head() const { return head_; }
    void restore(std::vector<double> data, std::size_t head, std::size_t size) {
        if (data.empty() || head >= data.size() || size > data.size())
            throw std::invalid_argument("inconsistent ring buffer state");
        data_ = std::move(data);
        head_ = head;
        size_ = size;
    }

private:
    std::vector<double> data_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    mutable std::vector<double> scratch_;
};

}  // namespace meshdet
