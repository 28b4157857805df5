#include "cellpic/decomposition.hpp"

#include "cellpic/error.hpp"

#include <string>

namespace cellpic {

int Partition::owner_of(int cell) const {
    if (cell < 0 || cell >= nc) throw ContractViolation("owner_of: cell " + std::to_string(cell) + " outside mesh");
    // Ranges are balanced, so a direct guess is off by at most one range.
    const int w = worker_count();
    int guess = static_cast<int>(static_cast<std::int64_t>(cell) * w / nc);
    while (cell < ranges[static_cast<std::size_t>(guess)].begin) --guess;
    while (cell >= ranges[static_cast<std::size_t>(guess)].end) ++guess;
    return guess;
}

bool Partition::adjacent(int a, int b) const {
    const int w = worker_count();
    return b == (a + 1) % w || a == (b + 1) % w;
}

Partition partition_grid(int nc, int workers) {
    if (workers < 1) throw ConfigError("worker count must be >= 1");
    if (nc < 1) throw ConfigError("partition needs at least one cell");
    if (workers > nc) {
        throw ConfigError("worker count " + std::to_string(workers) + " exceeds cell count " + std::to_string(nc));
    }
    Partition p;
    p.nc = nc;
    const int base = nc / workers;
    const int extra = nc % workers;
    int begin = 0;
    for (int w = 0; w < workers; ++w) {
        const int size = base + (w < extra ? 1 : 0);
        p.ranges.push_back({begin, begin + size});
        begin += size;
    }
    return p;
}

std::vector<double> exchange_guard_density(std::span<const DensityPiece> pieces, const Partition& partition,
                                           FieldBoundary bc) {
    if (static_cast<int>(pieces.size()) != partition.worker_count()) {
        throw ContractViolation("exchange_guard_density: one piece per worker required");
    }
    const auto nc = static_cast<std::size_t>(partition.nc);
    std::vector<double> rho(nc + 1, 0.0);
    for (std::size_t w = 0; w < pieces.size(); ++w) {
        const auto& piece = pieces[w];
        const auto& range = partition.ranges[w];
        if (piece.first_node != range.begin || piece.values.size() != static_cast<std::size_t>(range.size()) + 1) {
            throw ContractViolation("exchange_guard_density: piece " + std::to_string(w) +
                                    " does not match its range");
        }
        const auto first = static_cast<std::size_t>(range.begin);
        // Seam values from the left neighbour are already in rho[first].
        rho[first] += piece.values.front();
        for (std::size_t k = 1; k < piece.values.size(); ++k) rho[first + k] = piece.values[k];
    }
    if (bc.is_periodic()) {
        const double seam = rho[nc] + rho[0];
        rho[0] = seam;
        rho[nc] = seam;
    } else {
        rho[0] *= 2.0;
        rho[nc] *= 2.0;
    }
    return rho;
}

std::vector<MigrationMsg> build_messages(std::span<const std::vector<Emigrant>> emigrants,
                                         const Partition& partition) {
    const int w = partition.worker_count();
    if (static_cast<int>(emigrants.size()) != w) {
        throw ContractViolation("build_messages: one emigrant list per worker required");
    }
    std::vector<MigrationMsg> messages;
    for (int s = 0; s < w; ++s) {
        const int right = (s + 1) % w;
        const int left = (s + w - 1) % w;
        MigrationMsg to_left{s, left, {}};
        MigrationMsg to_right{s, right, {}};
        for (const Emigrant& e : emigrants[static_cast<std::size_t>(s)]) {
            const int d = partition.owner_of(e.dest_cell);
            if (d == s) continue;
            if (!partition.adjacent(s, d)) {
                throw CflViolation("particle from cell " + std::to_string(e.source_cell) + " jumped to cell " +
                                   std::to_string(e.dest_cell) + ", beyond the neighbouring subdomain");
            }
            (d == right ? to_right : to_left).particles.push_back(e);
        }
        if (left == right) {
            messages.push_back(std::move(to_right));
        } else {
            messages.push_back(std::move(to_left));
            messages.push_back(std::move(to_right));
        }
    }
    return messages;
}

MigrationTally migrate_particles(std::span<CellSortedStore> stores, const Partition& partition,
                                 std::span<const std::vector<Emigrant>> emigrants) {
    const int w = partition.worker_count();
    if (static_cast<int>(stores.size()) != w) throw ContractViolation("migrate_particles: one store per worker required");
    const std::vector<MigrationMsg> messages = build_messages(emigrants, partition);

    MigrationTally tally;
    for (const auto& m : messages) {
        tally.sent += m.particles.size();
        if (!m.particles.empty()) ++tally.messages;
    }
    tally.received = tally.sent;

    // Per destination, arrivals are appended in ascending source-worker
    // order; the worker's own movers take their place in that sequence.
    for (int d = 0; d < w; ++d) {
        CellSortedStore& dest = stores[static_cast<std::size_t>(d)];
        for (int s = 0; s < w; ++s) {
            if (s == d) {
                for (const Emigrant& e : emigrants[static_cast<std::size_t>(s)]) {
                    if (partition.owner_of(e.dest_cell) != d) continue;
                    insert_immigrants(dest, std::span<const Emigrant>(&e, 1));
                    ++tally.local;
                }
                continue;
            }
            for (const auto& m : messages) {
                if (m.source_worker == s && m.destination_worker == d) insert_immigrants(dest, m.particles);
            }
        }
    }
    return tally;
}

std::vector<CellSortedStore> split_store(const CellSortedStore& global, const Partition& partition) {
    if (global.first_cell() != 0 || global.cell_count() != partition.nc) {
        throw ContractViolation("split_store: store does not cover the whole mesh");
    }
    std::vector<CellSortedStore> out;
    out.reserve(partition.ranges.size());
    for (const CellRange& r : partition.ranges) {
        CellSortedStore sub(global.species_list(), global.global_nc(), r.begin, r.size(), 0);
        for (std::size_t isp = 0; isp < global.species_count(); ++isp) {
            for (int j = 0; j < r.size(); ++j) sub.cell(isp, j) = global.cell(isp, r.begin + j);
        }
        out.push_back(std::move(sub));
    }
    return out;
}

CellSortedStore merge_stores(std::span<const CellSortedStore> stores) {
    if (stores.empty()) throw ContractViolation("merge_stores: no stores");
    const CellSortedStore& head = stores.front();
    CellSortedStore global(head.species_list(), head.global_nc(), 0, head.global_nc(), 0);
    int expected = 0;
    for (const auto& s : stores) {
        if (s.first_cell() != expected) throw ContractViolation("merge_stores: stores are not contiguous");
        for (std::size_t isp = 0; isp < s.species_count(); ++isp) {
            for (int j = 0; j < s.cell_count(); ++j) global.cell(isp, s.first_cell() + j) = s.cell(isp, j);
        }
        expected += s.cell_count();
    }
    if (expected != head.global_nc()) throw ContractViolation("merge_stores: stores do not cover the mesh");
    return global;
}

} // namespace cellpic
