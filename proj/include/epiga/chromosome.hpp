#pragma once

#include <cstdint>
#include <vector>

namespace epiga {

// Fixed-length binary gene vector; the GA's unit of inheritance.
struct Chromosome {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    bool operator==(const Chromosome& o) const { return bits == o.bits; }

    // Bits as reals {0.0, 1.0} for the inference networks.
    std::vector<double> as_reals() const {
        std::vector<double> r(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) r[i] = bits[i] ? 1.0 : 0.0;
        return r;
    }
};

struct Population {
    std::vector<Chromosome> members;
    std::size_t generation = 0;

    std::size_t size() const { return members.size(); }
};

}  // namespace epiga
