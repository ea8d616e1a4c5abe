#pragma once

#include <cassert>
#include <cstddef>
#include <functional>
#include <vector>

namespace fairhash {

// Binary max-heap over a fixed key set [0, size) with in-place priority
// updates. Equal priorities resolve to the smaller key.
template <typename Priority, typename Less = std::less<Priority>>
class IndexedMaxHeap {
 public:
  IndexedMaxHeap() = default;

  explicit IndexedMaxHeap(std::vector<Priority> priorities, Less less = {})
      : prio_(std::move(priorities)), pos_(prio_.size()), heap_(prio_.size()), less_(less) {
    for (std::size_t i = 0; i < heap_.size(); ++i) {
      heap_[i] = i;
      pos_[i] = i;
    }
    for (std::size_t i = heap_.size() / 2; i-- > 0;) sift_down(i);
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  std::size_t top() const {
    assert(!heap_.empty());
    return heap_.front();
  }
  const Priority& top_priority() const { return prio_[heap_.front()]; }
  const Priority& priority(std::size_t key) const { return prio_[key]; }

  void update(std::size_t key, Priority p) {
    prio_[key] = std::move(p);
    sift_up(pos_[key]);
    sift_down(pos_[key]);
  }

 private:
  bool before(std::size_t a, std::size_t b) const {
    if (less_(prio_[b], prio_[a])) return true;
    if (less_(prio_[a], prio_[b])) return false;
    return a < b;
  }

  void place(std::size_t slot, std::size_t key) {
    heap_[slot] = key;
    pos_[key] = slot;
  }

  void sift_up(std::size_t slot) {
    const std::size_t key = heap_[slot];
    while (slot > 0) {
      const std::size_t parent = (slot - 1) / 2;
      if (!before(key, heap_[parent])) break;
      place(slot, heap_[parent]);
      slot = parent;
    }
    place(slot, key);
  }

  void sift_down(std::size_t slot) {
    const std::size_t key = heap_[slot];
    const std::size_t n = heap_.size();
    for (;;) {
      std::size_t child = 2 * slot + 1;
      if (child >= n) break;
      if (child + 1 < n && before(heap_[child + 1], heap_[child])) ++child;
      if (!before(heap_[child], key)) break;
      place(slot, heap_[child]);
      slot = child;
    }
    place(slot, key);
  }

  std::vector<Priority> prio_;
  std::vector<std::size_t> pos_;
  std::vector<std::size_t> heap_;
  Less less_;
};

}  // namespace fairhash
