#include "rflock/harness/history.hpp"

#include <sstream>

#include "rflock/pmem.hpp"
#include "rflock/queue.hpp"

namespace rflock::harness {

std::string OpDesc::render() const {
  switch (kind) {
    case OpKind::enqueue: return "enq(" + std::to_string(a) + ")";
    case OpKind::dequeue: return "deq";
    case OpKind::transfer:
      return "xfer(" + std::to_string(a) + "->" + std::to_string(b) + "," +
             std::to_string(c) + ")";
  }
  return "?";
}

int History::invoke(int tid, OpDesc op) {
  OpRec r;
  r.id = static_cast<int>(ops_.size());
  r.tid = tid;
  r.op = op;
  r.invoke_seq = seq_++;
  ops_.push_back(r);
  return r.id;
}

void History::respond(int id, Word result) {
  OpRec& r = ops_.at(id);
  r.completed = true;
  r.result = result;
  r.respond_seq = seq_++;
}

std::string History::render() const {
  std::ostringstream os;
  for (const auto& r : ops_) {
    os << "t" << r.tid << ":" << r.op.render();
    if (r.completed)
      os << "=" << r.result.render();
    else
      os << "=?";
    os << " ";
  }
  if (!crashes_.empty()) os << "[crash x" << crashes_.size() << "]";
  return os.str();
}

Word QueueOracle::apply(const OpDesc& op) {
  if (op.kind == OpKind::enqueue) {
    q_.push_back(op.a);
    return Word::of_bool(true);
  }
  if (q_.empty()) return Word::of_int(kEmptyQueue);
  int64_t k = q_.front();
  q_.pop_front();
  return Word::of_int(k);
}

Word BankOracle::apply(const OpDesc& op) {
  bal_.at(op.a) -= op.c;
  bal_.at(op.b) += op.c;
  return Word::of_bool(true);
}

namespace {

struct Search {
  const std::vector<const OpRec*>& chosen;
  SeqOracle& oracle;
  const std::vector<int64_t>& target;
  std::vector<char> used;
  std::vector<const OpRec*> order;

  bool precedes(const OpRec* a, const OpRec* b) const {
    return a->completed && a->respond_seq < b->invoke_seq;
  }

  bool ready(size_t i) const {
    for (size_t j = 0; j < chosen.size(); ++j)
      if (!used[j] && j != i && precedes(chosen[j], chosen[i])) return false;
    return true;
  }

  bool run() {
    if (order.size() == chosen.size()) {
      oracle.reset();
      for (const OpRec* r : order) {
        Word res = oracle.apply(r->op);
        if (r->completed && res != r->result) return false;
      }
      return oracle.state() == target;
    }
    for (size_t i = 0; i < chosen.size(); ++i) {
      if (used[i] || !ready(i)) continue;
      used[i] = 1;
      order.push_back(chosen[i]);
      if (run()) return true;
      order.pop_back();
      used[i] = 0;
    }
    return false;
  }
};

}  // namespace

DlVerdict check_durable_linearizability(const History& h, SeqOracle& oracle,
                                        const std::vector<int64_t>& final_state,
                                        size_t max_ops) {
  const auto& ops = h.ops();
  if (ops.size() > max_ops)
    throw ScenarioError("history too large for the brute-force checker (" +
                        std::to_string(ops.size()) + " ops)");
  std::vector<const OpRec*> completed;
  std::vector<const OpRec*> pending;
  for (const auto& r : ops)
    (r.completed ? completed : pending).push_back(&r);

  size_t nsub = size_t{1} << pending.size();
  for (size_t mask = 0; mask < nsub; ++mask) {
    std::vector<const OpRec*> chosen = completed;
    for (size_t i = 0; i < pending.size(); ++i)
      if (mask & (size_t{1} << i)) chosen.push_back(pending[i]);
    Search s{chosen, oracle, final_state,
             std::vector<char>(chosen.size(), 0), {}};
    if (s.run()) return {true, ""};
  }
  std::ostringstream os;
  os << "no linearization matches the recovered state; history: " << h.render()
     << " state:";
  for (int64_t v : final_state) os << " " << v;
  return {false, os.str()};
}

}  // namespace rflock::harness
