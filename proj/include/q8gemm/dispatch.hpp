#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include "q8gemm/kernel.hpp"
#include "q8gemm/pack.hpp"

namespace q8gemm {

/// Clamps the blocking to the problem size. The register tile shrinks to the
/// matrix when a dimension is small (an M of 1 runs a one-row tile), and cache
/// blocks shrink to one pass when the whole dimension fits.
inline BlockingParams select_blocking(int m, int n, int k, const BlockingParams& defaults) {
    defaults.validate();
    if (m < 1 || n < 1 || k < 1) {
        throw std::invalid_argument("select_blocking: dimensions must be >= 1");
    }
    BlockingParams bp = defaults;
    bp.mr = std::min(defaults.mr, m);
    bp.nr = std::min(defaults.nr, n);
    bp.mcb = std::min(defaults.mcb, round_up(m, bp.mr));
    bp.ncb = std::min(defaults.ncb, round_up(n, bp.nr));
    bp.kcb = std::min(defaults.kcb, round_up(k, 2));
    bp.validate();
    return bp;
}

enum class MClass : uint8_t { kOne, kLtMr, kMultipleOfMr, kGeneral };
enum class NClass : uint8_t { kLtNr, kMultipleOfNr, kGeneral };
enum class KClass : uint8_t { kPairAligned, kGeneral };

/// Pure function of the problem shape and the kernel family constants.
struct ShapeClass {
    MClass m_class;
    NClass n_class;
    KClass k_class;
    KernelVariant variant;
    int mr;  // family register-tile sizes the classes are measured against
    int nr;

    bool operator==(const ShapeClass& o) const = default;
};

struct ShapeClassHash {
    std::size_t operator()(const ShapeClass& s) const {
        uint64_t key = static_cast<uint64_t>(s.m_class);
        key = key * 31 + static_cast<uint64_t>(s.n_class);
        key = key * 31 + static_cast<uint64_t>(s.k_class);
        key = key * 31 + static_cast<uint64_t>(s.variant);
        key = key * 8191 + static_cast<uint64_t>(s.mr);
        key = key * 8191 + static_cast<uint64_t>(s.nr);
        return std::hash<uint64_t>{}(key);
    }
};

inline ShapeClass classify_shape(int m, int n, int k, KernelVariant variant,
                                 const BlockingParams& family) {
    ShapeClass sc;
    sc.m_class = (m == 1)            ? MClass::kOne
                 : (m < family.mr)   ? MClass::kLtMr
                 : (m % family.mr == 0) ? MClass::kMultipleOfMr
                                        : MClass::kGeneral;
    sc.n_class = (n < family.nr)        ? NClass::kLtNr
                 : (n % family.nr == 0) ? NClass::kMultipleOfNr
                                        : NClass::kGeneral;
    sc.k_class = (k % 2 == 0) ? KClass::kPairAligned : KClass::kGeneral;
    sc.variant = variant;
    sc.mr = family.mr;
    sc.nr = family.nr;
    return sc;
}

enum class TileKind : uint8_t { kGeneric, kM1, kFullTile14x32 };

/// The resolved kernel for one shape class: the tile entry points plus the
/// nominal register-tile extents they were specialized for (0 = runtime).
struct KernelDescriptor {
    int mr_eff = 0;
    int nr_eff = 0;
    TileKind tile = TileKind::kGeneric;
    MicrokernelI32Fn kernel_i32 = nullptr;
    MicrokernelI16Fn kernel_i16 = nullptr;
};

/// Memoizes shape class -> kernel descriptor. Safe for concurrent lookups;
/// each distinct class is built exactly once and every caller observes the
/// same descriptor.
class KernelCache {
public:
    explicit KernelCache(bool generic_only = false) : generic_only_(generic_only) {}

    const KernelDescriptor& get_or_build(const ShapeClass& sc) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = table_.find(sc);
        if (it != table_.end()) {
            return it->second;
        }
        ++build_count_;
        return table_.emplace(sc, build(sc)).first->second;
    }

    uint64_t build_count() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return build_count_;
    }

    static KernelCache& process_cache() {
        static KernelCache cache;
        return cache;
    }

private:
    KernelDescriptor build(const ShapeClass& sc) const {
        KernelDescriptor d;
        d.kernel_i32 = &microkernel_i32;
        d.kernel_i16 = &microkernel_i16;
        if (generic_only_) {
            return d;
        }
        if (sc.m_class == MClass::kOne) {
            d.mr_eff = 1;
            d.tile = TileKind::kM1;
            d.kernel_i32 = &microkernel_i32_m1;
            d.kernel_i16 = &microkernel_i16_m1;
        } else if (sc.mr == 14 && sc.nr == 32 && sc.m_class != MClass::kLtMr &&
                   sc.n_class != NClass::kLtNr) {
            // Tiles are always full mr x nr (panels zero-pad), so the fixed
            // tile applies whenever the effective mr/nr equal the family's.
            d.mr_eff = 14;
            d.nr_eff = 32;
            d.tile = TileKind::kFullTile14x32;
            d.kernel_i32 = &microkernel_i32_tile14x32;
            d.kernel_i16 = &microkernel_i16_tile14x32;
        }
        return d;
    }

    mutable std::mutex mutex_;
    std::unordered_map<ShapeClass, KernelDescriptor, ShapeClassHash> table_;
    uint64_t build_count_ = 0;
    bool generic_only_ = false;
};

inline const KernelDescriptor& get_or_build_kernel(KernelCache& cache, const ShapeClass& sc) {
    return cache.get_or_build(sc);
}

}  // namespace q8gemm
