#pragma once

#include <deque>
#include <string>
#include <vector>

#include "rflock/word.hpp"

namespace rflock::harness {

enum class OpKind { enqueue, dequeue, transfer };

struct OpDesc {
  OpKind kind;
  int64_t a = 0, b = 0, c = 0;  // enqueue key / transfer (from, to, amount)
  std::string render() const;
};

struct OpRec {
  int id = 0;
  int tid = 0;
  OpDesc op{};
  bool completed = false;
  Word result{};
  uint64_t invoke_seq = 0;
  uint64_t respond_seq = 0;
};

// Invocation/response history with crash markers. Well-formedness (a respond
// matches a prior invoke on the same thread) is by construction: ops respond
// through the id their invoke returned.
class History {
 public:
  int invoke(int tid, OpDesc op);
  void respond(int id, Word result);
  void crash_marker() { crashes_.push_back(seq_++); }

  const std::vector<OpRec>& ops() const { return ops_; }
  size_t crash_count() const { return crashes_.size(); }
  std::string render() const;

 private:
  std::vector<OpRec> ops_;
  std::vector<uint64_t> crashes_;
  uint64_t seq_ = 1;
};

// Deterministic sequential models for the structures under test.
class SeqOracle {
 public:
  virtual ~SeqOracle() = default;
  virtual void reset() = 0;
  virtual Word apply(const OpDesc& op) = 0;
  virtual std::vector<int64_t> state() const = 0;
};

class QueueOracle : public SeqOracle {
 public:
  void reset() override { q_.clear(); }
  Word apply(const OpDesc& op) override;
  std::vector<int64_t> state() const override {
    return std::vector<int64_t>(q_.begin(), q_.end());
  }

 private:
  std::deque<int64_t> q_;
};

class BankOracle : public SeqOracle {
 public:
  explicit BankOracle(std::vector<int64_t> init) : init_(std::move(init)) {}
  void reset() override { bal_ = init_; }
  Word apply(const OpDesc& op) override;
  std::vector<int64_t> state() const override { return bal_; }

 private:
  std::vector<int64_t> init_;
  std::vector<int64_t> bal_;
};

struct DlVerdict {
  bool ok = false;
  std::string why;
};

// Brute-force durable-linearizability check: accepts iff some sequential
// order of all completed ops plus a subset of the crash-pending ones,
// consistent with real-time precedence and with the recorded responses,
// drives the oracle to `final_state`.
DlVerdict check_durable_linearizability(const History& h, SeqOracle& oracle,
                                        const std::vector<int64_t>& final_state,
                                        size_t max_ops = 8);

}  // namespace rflock::harness
