#include "geneo/schwarz.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace geneo {

long ExchangeLedger::allgather_events(const std::string& tag) const {
  long n = 0;
  for (const auto& c : collectives) {
    if (tag.empty() || c.tag == tag) n += c.events;
  }
  return n;
}

void ExchangeLedger::clear() {
  point_to_point.clear();
  collectives.clear();
}

void ExchangeLedger::write_csv(std::ostream& out) const {
  out << "sender,receiver,messages,doubles_sent\n";
  for (const auto& [pair, stats] : point_to_point) {
    out << pair.first << ',' << pair.second << ',' << stats.messages << ',' << stats.doubles
        << '\n';
  }
  for (const auto& c : collectives) {
    out << -1 << ',' << -1 << ',' << c.events << ',' << c.doubles << '\n';
  }
}

SubdomainComm::SubdomainComm(const OverlappingDecomposition& decomp, int workers)
    : decomp_(&decomp), workers_(workers) {
  if (workers < 1) throw ConfigError("SubdomainComm: worker count must be >= 1");
}

SubdomainComm::Mailbox SubdomainComm::neighbor_exchange(const Mailbox& outbox) {
  const int n = num_subdomains();
  if (static_cast<int>(outbox.size()) != n)
    throw NumericsError("neighbor_exchange: outbox must have one slot per subdomain");
  Mailbox inbox(n);
  for (int j = 0; j < n; ++j) {
    const auto& nbrs = decomp_->neighbors[j];
    for (const auto& [dest, payload] : outbox[j]) {
      if (dest == j || !std::binary_search(nbrs.begin(), nbrs.end(), dest)) {
        std::ostringstream msg;
        msg << "neighbor_exchange: subdomain " << j << " attempted to message " << dest
            << " which is not a neighbor";
        throw NumericsError(msg.str());
      }
      inbox[dest].emplace_back(j, payload);
      auto& stats = ledger_.point_to_point[{j, dest}];
      stats.messages += 1;
      stats.doubles += payload.size();
    }
  }
  for (auto& box : inbox) {
    std::sort(box.begin(), box.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return inbox;
}

void SubdomainComm::record_allgather(const std::string& tag, long doubles) {
  for (auto& c : ledger_.collectives) {
    if (c.tag == tag) {
      c.events += 1;
      c.doubles += doubles;
      return;
    }
  }
  ledger_.collectives.push_back({tag, 1, doubles});
}

void SubdomainComm::parallel_for(int n, const std::function<void(int)>& f) const {
  if (n <= 0) return;
  const int team = std::min(workers_, n);
  if (team == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    try {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(team);
  for (int t = 0; t < team; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

PartitionOfUnity build_pou(const OverlappingDecomposition& decomp, int block_size) {
  if (block_size < 1) throw ConfigError("build_pou: block size must be >= 1");
  // The boundary-masked partition of unity exists only when every node is
  // interior to at least one subdomain; a node masked everywhere would get
  // zero total weight and the weights could not sum to identity there.
  for (std::size_t node = 0; node < decomp.pou_count.size(); ++node)
    if (decomp.node_multiplicity[node] > 0 && decomp.pou_count[node] == 0) {
      std::ostringstream msg;
      msg << "build_pou: node " << node
          << " is interior to no subdomain, so the boundary-masked partition of unity "
             "does not exist; use box adjacency or a single-axis partition";
      throw NumericsError(msg.str());
    }
  PartitionOfUnity pou;
  pou.block_size = block_size;
  const int n = decomp.num_subdomains();
  pou.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto& nodes = decomp.subdomain_nodes[j];
    Vector w(static_cast<int>(nodes.size()) * block_size);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double value = 0.0;
      if (!decomp.interior_boundary[j][i]) value = 1.0 / decomp.pou_count[nodes[i]];
      for (int r = 0; r < block_size; ++r) w[static_cast<int>(i) * block_size + r] = value;
    }
    pou.weights[j] = std::move(w);
  }
  return pou;
}

namespace {

SparseMatrix extract_principal_submatrix(const SparseMatrix& a, const std::vector<int>& dofs,
                                         const std::unordered_map<int, int>& global_to_local) {
  std::vector<Triplet> triplets;
  for (std::size_t lc = 0; lc < dofs.size(); ++lc) {
    for (SparseMatrix::InnerIterator it(a, dofs[lc]); it; ++it) {
      auto found = global_to_local.find(static_cast<int>(it.row()));
      if (found != global_to_local.end())
        triplets.emplace_back(found->second, static_cast<int>(lc), it.value());
    }
  }
  SparseMatrix sub(static_cast<int>(dofs.size()), static_cast<int>(dofs.size()));
  sub.setFromTriplets(triplets.begin(), triplets.end());
  sub.makeCompressed();
  return sub;
}

}  // namespace

std::vector<SubdomainOperators> build_subdomain_operators(const ElementOperator& op,
                                                          const SparseSystem& sys,
                                                          const OverlappingDecomposition& decomp,
                                                          const PartitionOfUnity& pou,
                                                          SubdomainComm& comm) {
  const int bs = sys.block_size;
  if (pou.block_size != bs)
    throw ConfigError("build_subdomain_operators: partition of unity block size mismatch");
  if (op.block_size() != bs)
    throw ConfigError("build_subdomain_operators: operator block size mismatch");
  const int n = decomp.num_subdomains();
  std::vector<SubdomainOperators> ops(n);

  comm.parallel_for(n, [&](int j) {
    SubdomainOperators& s = ops[j];
    s.subdomain = j;
    s.block_size = bs;
    const auto& nodes = decomp.subdomain_nodes[j];
    const int nl_nodes = static_cast<int>(nodes.size());
    const int nl = nl_nodes * bs;

    std::unordered_map<int, int> node_g2l;
    node_g2l.reserve(nodes.size() * 2);
    for (int i = 0; i < nl_nodes; ++i) node_g2l.emplace(nodes[i], i);

    s.local_to_global.resize(nl);
    s.interior_mask.assign(nl, 0);
    s.dirichlet_mask.assign(nl, 0);
    for (int i = 0; i < nl_nodes; ++i) {
      for (int r = 0; r < bs; ++r) {
        const int ldof = i * bs + r;
        const int gdof = nodes[i] * bs + r;
        s.local_to_global[ldof] = gdof;
        if (decomp.interior_boundary[j][i]) s.interior_mask[ldof] = 1;
        if (sys.dirichlet[gdof]) s.dirichlet_mask[ldof] = 1;
      }
    }
    s.pou = pou.weights[j];

    std::unordered_map<int, int> dof_g2l;
    dof_g2l.reserve(s.local_to_global.size() * 2);
    for (int ldof = 0; ldof < nl; ++ldof) dof_g2l.emplace(s.local_to_global[ldof], ldof);
    s.a_submatrix = extract_principal_submatrix(sys.A, s.local_to_global, dof_g2l);

    auto local_node = [&node_g2l](int global_node) {
      auto it = node_g2l.find(global_node);
      return it == node_g2l.end() ? -1 : it->second;
    };

    std::vector<uint8_t> eliminate_dirichlet(nl, 0);
    std::vector<uint8_t> eliminate_global(nl, 0);
    for (int ldof = 0; ldof < nl; ++ldof) {
      eliminate_global[ldof] = s.dirichlet_mask[ldof];
      eliminate_dirichlet[ldof] = s.dirichlet_mask[ldof] || s.interior_mask[ldof];
    }

    s.a_dirichlet = assemble_on_cells(op, decomp.subdomain_cells[j], nl_nodes, local_node,
                                      eliminate_dirichlet, /*unit_diagonal=*/true);
    s.a_neumann = assemble_on_cells(op, decomp.subdomain_cells[j], nl_nodes, local_node,
                                    eliminate_global, /*unit_diagonal=*/true);
    s.a_overlap_neumann = assemble_on_cells(op, decomp.overlap_cells[j], nl_nodes, local_node,
                                            eliminate_global, /*unit_diagonal=*/false);

    s.solver = std::make_shared<SparseFactorization>(s.a_dirichlet);
    if (s.solver->singular()) {
      std::ostringstream msg;
      msg << "build_subdomain_operators: local Dirichlet matrix of subdomain " << j
          << " is singular";
      throw NumericsError(msg.str());
    }
  });
  return ops;
}

SchwarzApplyEngine::SchwarzApplyEngine(const std::vector<SubdomainOperators>& ops,
                                       SubdomainComm& comm, int num_global_dofs)
    : ops_(&ops), comm_(&comm), n_global_(num_global_dofs) {
  const auto& decomp = comm.decomposition();
  const int n = static_cast<int>(ops.size());
  if (n != decomp.num_subdomains())
    throw ConfigError("SchwarzApplyEngine: operator count does not match the decomposition");
  own_local_.resize(n);
  own_global_.resize(n);
  send_.resize(n);
  recv_.resize(n);
  std::vector<std::map<int, std::vector<int>>> send_map(n), recv_map(n);
  for (int j = 0; j < n; ++j) {
    const auto& s = ops[j];
    const int bs = s.block_size;
    for (int ldof = 0; ldof < static_cast<int>(s.local_to_global.size()); ++ldof) {
      const int gdof = s.local_to_global[ldof];
      const int owner = decomp.node_owner[gdof / bs];
      if (owner == j) {
        own_local_[j].push_back(ldof);
        own_global_[j].push_back(gdof);
      } else {
        send_map[j][owner].push_back(ldof);
        recv_map[owner][j].push_back(gdof);
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    for (auto& [dest, ldofs] : send_map[j]) send_[j].emplace_back(dest, std::move(ldofs));
    for (auto& [src, gdofs] : recv_map[j]) recv_[j].emplace_back(src, std::move(gdofs));
  }
}

std::vector<Vector> SchwarzApplyEngine::local_solves(const Vector& r) const {
  const int n = static_cast<int>(ops_->size());
  std::vector<Vector> c(n);
  comm_->parallel_for(n, [&](int j) {
    const auto& s = (*ops_)[j];
    const int nl = static_cast<int>(s.local_to_global.size());
    Vector rl(nl);
    for (int i = 0; i < nl; ++i)
      rl[i] = s.interior_mask[i] ? 0.0 : r[s.local_to_global[i]];
    Vector cl = s.solver->solve(rl);
    for (int i = 0; i < nl; ++i)
      if (s.interior_mask[i]) cl[i] = 0.0;
    c[j] = std::move(cl);
  });
  return c;
}

Vector SchwarzApplyEngine::combine(const std::vector<Vector>& contributions) const {
  const int n = static_cast<int>(ops_->size());
  SubdomainComm::Mailbox outbox(n);
  for (int j = 0; j < n; ++j) {
    for (const auto& [dest, ldofs] : send_[j]) {
      Vector payload(static_cast<int>(ldofs.size()));
      for (std::size_t i = 0; i < ldofs.size(); ++i) payload[static_cast<int>(i)] =
          contributions[j][ldofs[i]];
      outbox[j].emplace_back(dest, std::move(payload));
    }
  }
  SubdomainComm::Mailbox inbox = comm_->neighbor_exchange(outbox);

  Vector y = Vector::Zero(n_global_);
  comm_->parallel_for(n, [&](int p) {
    for (std::size_t i = 0; i < own_local_[p].size(); ++i)
      y[own_global_[p][i]] += contributions[p][own_local_[p][i]];
    if (inbox[p].size() != recv_[p].size())
      throw NumericsError("SchwarzApplyEngine: halo inbox does not match the receive plan");
    for (std::size_t m = 0; m < recv_[p].size(); ++m) {
      const auto& [sender, gdofs] = recv_[p][m];
      const auto& [got_sender, payload] = inbox[p][m];
      if (got_sender != sender || payload.size() != static_cast<int>(gdofs.size()))
        throw NumericsError("SchwarzApplyEngine: halo message does not match the receive plan");
      for (std::size_t i = 0; i < gdofs.size(); ++i) y[gdofs[i]] += payload[static_cast<int>(i)];
    }
  });
  return y;
}

OneLevelSchwarz::OneLevelSchwarz(const std::vector<SubdomainOperators>& ops, SubdomainComm& comm,
                                 int num_global_dofs)
    : engine_(ops, comm, num_global_dofs) {}

Vector OneLevelSchwarz::apply(const Vector& r) const {
  return engine_.combine(engine_.local_solves(r));
}

LinearOperator OneLevelSchwarz::as_operator() const {
  return LinearOperator{engine_.num_global_dofs(),
                        [this](const Vector& r, Vector& y) { y = apply(r); }};
}

}  // namespace geneo
