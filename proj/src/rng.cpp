#include "fedsim/rng.hpp"

namespace fedsim {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round, std::string_view purpose,
                          std::uint64_t index) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a64(purpose));
    h = splitmix64(h ^ round);
    h = splitmix64(h ^ index);
    return h;
}

} // namespace fedsim
