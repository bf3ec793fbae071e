//! Bounded worker pool over independent work items.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

/// Applies `f` to every item on up to `workers` threads. Items are claimed
/// from a shared counter; results come back in input order whatever the
/// completion order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

/// `steps` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![start],
        _ => (0..steps)
            .map(|i| {
                if i == steps - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_worker_count() {
        let items: Vec<u64> = (0..57).collect();
        let f = |x: &u64| {
            // Uneven work so completion order differs from input order.
            let mut a = *x;
            for _ in 0..(x % 7) * 1000 {
                a = a.wrapping_mul(6364136223846793005).wrapping_add(1);
            }
            (*x, a)
        };
        let one = parallel_map(&items, 1, f);
        for w in [2, 3, 8, 100] {
            assert_eq!(parallel_map(&items, w, f), one);
        }
    }

    #[test]
    fn empty_input() {
        let v: Vec<i32> = parallel_map(&Vec::<i32>::new(), 4, |x| *x);
        assert!(v.is_empty());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 5.0, 11);
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 5.0);
        assert!((v[3] - 1.5).abs() < 1e-15);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
    }
}
