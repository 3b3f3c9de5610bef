#pragma once

// Labelled tensor-factor bookkeeping.  A SubsystemLayout is an ordered list of
// (label, dimension) pairs; the first subsystem is the most significant index
// (row-major), so flattened indices agree with Kronecker-product order.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qgp {

struct Subsystem {
    std::string label;
    long dim = 1;

    bool operator==(const Subsystem& other) const = default;
};

class SubsystemLayout {
public:
    /// Guard against accidentally materialising astronomically large tensors.
    static constexpr long default_dim_cap = 4096;

    SubsystemLayout() = default;

    explicit SubsystemLayout(std::vector<Subsystem> subsystems,
                             long dim_cap = default_dim_cap)
        : subsystems_(std::move(subsystems)) {
        long total = 1;
        for (std::size_t i = 0; i < subsystems_.size(); ++i) {
            const auto& s = subsystems_[i];
            if (s.label.empty())
                throw std::invalid_argument("subsystem label must be non-empty");
            if (s.dim < 1)
                throw std::invalid_argument("subsystem '" + s.label +
                                            "' has non-positive dimension");
            for (std::size_t j = 0; j < i; ++j)
                if (subsystems_[j].label == s.label)
                    throw std::invalid_argument("duplicate subsystem label '" +
                                                s.label + "'");
            if (total > dim_cap / s.dim)
                throw std::invalid_argument(
                    "total dimension exceeds cap of " + std::to_string(dim_cap));
            total *= s.dim;
        }
        total_dim_ = total;
    }

    long total_dim() const { return total_dim_; }
    std::size_t count() const { return subsystems_.size(); }
    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    const Subsystem& subsystem(std::size_t i) const { return subsystems_.at(i); }

    bool has(std::string_view label) const {
        return std::any_of(subsystems_.begin(), subsystems_.end(),
                           [&](const Subsystem& s) { return s.label == label; });
    }

    std::size_t index_of(std::string_view label) const {
        for (std::size_t i = 0; i < subsystems_.size(); ++i)
            if (subsystems_[i].label == label) return i;
        throw std::invalid_argument("no subsystem labelled '" +
                                    std::string(label) + "'");
    }

    long dim_of(std::string_view label) const {
        return subsystems_[index_of(label)].dim;
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(subsystems_.size());
        for (const auto& s : subsystems_) out.push_back(s.label);
        return out;
    }

    std::vector<long> dims() const {
        std::vector<long> out;
        out.reserve(subsystems_.size());
        for (const auto& s : subsystems_) out.push_back(s.dim);
        return out;
    }

    /// Row-major strides: stride of the last subsystem is 1.
    std::vector<long> strides() const {
        std::vector<long> out(subsystems_.size(), 1);
        for (std::size_t i = subsystems_.size(); i-- > 1;)
            out[i - 1] = out[i] * subsystems_[i].dim;
        return out;
    }

    /// Sub-layout of the given labels, in the order given.  No cap check: a
    /// subset of a validated layout cannot outgrow it.
    SubsystemLayout subset(const std::vector<std::string>& labels) const {
        std::vector<Subsystem> picked;
        picked.reserve(labels.size());
        for (const auto& l : labels) picked.push_back(subsystems_[index_of(l)]);
        return SubsystemLayout(std::move(picked),
                               std::numeric_limits<long>::max());
    }

    /// Concatenation self ++ other; labels must stay unique.
    SubsystemLayout concat(const SubsystemLayout& other,
                           long dim_cap = default_dim_cap) const {
        std::vector<Subsystem> joined = subsystems_;
        joined.insert(joined.end(), other.subsystems_.begin(),
                      other.subsystems_.end());
        return SubsystemLayout(std::move(joined), dim_cap);
    }

    bool operator==(const SubsystemLayout& other) const {
        return subsystems_ == other.subsystems_;
    }

private:
    std::vector<Subsystem> subsystems_;
    long total_dim_ = 1;
};

/// Digits of `flat` in the mixed-radix system given by `dims` (first digit most
/// significant).
inline void decode_index(const std::vector<long>& dims, long flat,
                         std::vector<long>& digits) {
    digits.resize(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
        digits[i] = flat % dims[i];
        flat /= dims[i];
    }
}

inline long encode_index(const std::vector<long>& strides,
                         const std::vector<long>& digits) {
    long flat = 0;
    for (std::size_t i = 0; i < strides.size(); ++i) flat += strides[i] * digits[i];
    return flat;
}

} // namespace qgp
