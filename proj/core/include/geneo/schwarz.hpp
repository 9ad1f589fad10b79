#pragma once

#include <map>
#include <memory>
#include <ostream>

#include "geneo/assembly.hpp"
#include "geneo/krylov.hpp"

namespace geneo {

/// Message accounting for the simulated subdomain workers: point-to-point
/// traffic per ordered (sender, receiver) pair plus tagged collective events.
struct ExchangeLedger {
  struct PairStats {
    long messages = 0;
    long doubles = 0;
  };
  std::map<std::pair<int, int>, PairStats> point_to_point;

  struct Collective {
    std::string tag;
    long events = 0;
    long doubles = 0;
  };
  std::vector<Collective> collectives;

  long allgather_events(const std::string& tag = "") const;
  void clear();
  /// CSV rows "sender,receiver,messages,doubles_sent"; collective events are
  /// aggregated into rows with sender = receiver = -1.
  void write_csv(std::ostream& out) const;
};

/// In-process stand-in for a distributed communicator: one rank per
/// subdomain, executed by a fixed pool of workers. Point-to-point messages
/// are only deliverable between neighbor subdomains; every transfer is
/// recorded in the ledger.
class SubdomainComm {
 public:
  SubdomainComm(const OverlappingDecomposition& decomp, int workers);

  int num_subdomains() const { return decomp_->num_subdomains(); }
  int workers() const { return workers_; }
  const OverlappingDecomposition& decomposition() const { return *decomp_; }

  using Mailbox = std::vector<std::vector<std::pair<int, Vector>>>;

  /// Delivers outbox[j] = {(dest, payload)...} and returns inbox[j] sorted by
  /// sender. Throws NumericsError when a payload addresses a non-neighbor.
  Mailbox neighbor_exchange(const Mailbox& outbox);

  /// Records one tagged all-gather event of the given payload size.
  void record_allgather(const std::string& tag, long doubles);

  ExchangeLedger& ledger() { return ledger_; }
  const ExchangeLedger& ledger() const { return ledger_; }

  /// Runs f(i) for i in [0, n) on the worker pool (contiguous chunks);
  /// exceptions are captured and rethrown on the calling thread.
  void parallel_for(int n, const std::function<void(int)>& f) const;

 private:
  const OverlappingDecomposition* decomp_;
  int workers_;
  ExchangeLedger ledger_;
};

/// Diagonal partition of unity: zero on the artificial interior boundary of
/// each subdomain, elsewhere 1/(number of subdomains where the dof is
/// interior), so the weighted restrictions sum to the identity.
struct PartitionOfUnity {
  int block_size = 1;
  std::vector<Vector> weights;  // per subdomain, local dof numbering
};

/// Throws NumericsError if some dof is interior to no subdomain (possible for
/// multi-axis face-adjacency partitions; box adjacency avoids it).
PartitionOfUnity build_pou(const OverlappingDecomposition& decomp, int block_size);

/// Per-subdomain matrices and the factorization used by the Schwarz solves.
/// Local dofs are the subdomain's sorted global nodes, blocked per node.
struct SubdomainOperators {
  int subdomain = -1;
  int block_size = 1;
  std::vector<int> local_to_global;    // dof level
  std::vector<uint8_t> interior_mask;  // dof on the artificial interior boundary
  std::vector<uint8_t> dirichlet_mask; // dof carrying a global Dirichlet constraint
  Vector pou;                          // partition of unity diagonal

  SparseMatrix a_dirichlet;        // interior boundary + global constraints eliminated (unit diag)
  SparseMatrix a_submatrix;        // principal submatrix of the assembled global matrix
  SparseMatrix a_neumann;          // assembled on all subdomain cells (global constraints only)
  SparseMatrix a_overlap_neumann;  // assembled on the overlap cells (zero rows at constraints)

  std::shared_ptr<SparseFactorization> solver;  // factorization of a_dirichlet
};

std::vector<SubdomainOperators> build_subdomain_operators(const ElementOperator& op,
                                                          const SparseSystem& sys,
                                                          const OverlappingDecomposition& decomp,
                                                          const PartitionOfUnity& pou,
                                                          SubdomainComm& comm);

/// Shared plumbing of the Schwarz preconditioners: masked local solves in
/// parallel, then owner-computes accumulation of the local contributions with
/// a neighbor halo exchange.
class SchwarzApplyEngine {
 public:
  SchwarzApplyEngine(const std::vector<SubdomainOperators>& ops, SubdomainComm& comm,
                     int num_global_dofs);

  /// c_j = E_j A_j^{-1} E_j R_j r  (E_j masks the artificial boundary).
  std::vector<Vector> local_solves(const Vector& r) const;

  /// y = sum_j R_j^T c_j via owner-computes accumulation + halo exchange.
  Vector combine(const std::vector<Vector>& contributions) const;

  const std::vector<SubdomainOperators>& ops() const { return *ops_; }
  SubdomainComm& comm() const { return *comm_; }
  int num_global_dofs() const { return n_global_; }

 private:
  const std::vector<SubdomainOperators>* ops_;
  SubdomainComm* comm_;
  int n_global_;
  // Halo plan: per subdomain, dofs owned locally and dofs to ship to owners.
  std::vector<std::vector<int>> own_local_;                             // local dof ids
  std::vector<std::vector<int>> own_global_;                            // matching global ids
  std::vector<std::vector<std::pair<int, std::vector<int>>>> send_;     // (dest, local dofs)
  std::vector<std::vector<std::pair<int, std::vector<int>>>> recv_;     // (sender, global dofs)
};

/// One-level additive Schwarz preconditioner.
class OneLevelSchwarz {
 public:
  OneLevelSchwarz(const std::vector<SubdomainOperators>& ops, SubdomainComm& comm,
                  int num_global_dofs);
  Vector apply(const Vector& r) const;
  LinearOperator as_operator() const;
  const SchwarzApplyEngine& engine() const { return engine_; }

 private:
  SchwarzApplyEngine engine_;
};

}  // namespace geneo
