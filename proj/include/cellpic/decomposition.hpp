#pragma once

#include "cellpic/core.hpp"
#include "cellpic/fields.hpp"
#include "cellpic/mover.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cellpic {

struct CellRange {
    int begin = 0;
    int end = 0;

    int size() const { return end - begin; }
    bool contains(int cell) const { return cell >= begin && cell < end; }
};

/// Contiguous, balanced split of the mesh among workers.
struct Partition {
    int nc = 0;
    std::vector<CellRange> ranges;

    int worker_count() const { return static_cast<int>(ranges.size()); }
    int owner_of(int cell) const;
    /// True when b is w's left or right neighbour, periodic seam included.
    bool adjacent(int a, int b) const;
};

/// Ranges differ in size by at most one; the first nc % workers ranges get
/// the extra cell. Throws ConfigError when workers > nc or workers < 1.
Partition partition_grid(int nc, int workers);

/// Sum the shared nodes of per-worker density pieces into one global array
/// of nc + 1 nodes. Seam nodes add the lower-index worker's share first.
std::vector<double> exchange_guard_density(std::span<const DensityPiece> pieces, const Partition& partition,
                                           FieldBoundary bc = FieldBoundary::periodic());

/// Particles sent from one worker to another.
struct MigrationMsg {
    int source_worker = 0;
    int destination_worker = 0;
    std::vector<Emigrant> particles;
};

struct MigrationTally {
    std::size_t local = 0;    // stayed inside their subdomain
    std::size_t sent = 0;     // left through a message
    std::size_t received = 0; // arrived through a message
    std::size_t messages = 0; // non-empty messages
};

/// Split each worker's emigrants into a local list and one message per
/// neighbour. Throws CflViolation when a destination worker is not adjacent.
std::vector<MigrationMsg> build_messages(std::span<const std::vector<Emigrant>> emigrants,
                                         const Partition& partition);

/// Deliver emigrants (one list per worker, as produced by extract_emigrants)
/// to the owning subdomain stores. Arrivals are appended in ascending
/// source-worker order so the result matches the single-domain resort.
MigrationTally migrate_particles(std::span<CellSortedStore> stores, const Partition& partition,
                                 std::span<const std::vector<Emigrant>> emigrants);

/// Build one store per partition range from the same seeded load as the
/// single-domain store.
std::vector<CellSortedStore> split_store(const CellSortedStore& global, const Partition& partition);

/// Reassemble subdomain stores into one global store.
CellSortedStore merge_stores(std::span<const CellSortedStore> stores);

} // namespace cellpic
