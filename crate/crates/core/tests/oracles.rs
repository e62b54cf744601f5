use std::collections::{HashSet, VecDeque};

use coordlab::aggregation::{all_rankings, nth_profile, pairwise_majority, profile_count, PreferenceProfile};
use coordlab::bounds::CoordinationParams;
use coordlab::findability::{cascade, cascade_many, Acceptance, Lattice, SolutionKind};
use coordlab::hierarchy::optimal_group_count_with;
use coordlab::Execution;

const CELLS: [Acceptance; 4] = [
    Acceptance::Neither,
    Acceptance::Findable,
    Acceptance::Accurate,
    Acceptance::Both,
];

fn every_lattice(w: usize, h: usize) -> impl Iterator<Item = Lattice> {
    let n = w * h;
    (0..4usize.pow(n as u32)).map(move |code| {
        let cells = (0..n).map(|i| CELLS[(code / 4usize.pow(i as u32)) % 4]).collect();
        Lattice::new(w, h, cells, 1).unwrap()
    })
}

/// With threshold 1 a cascade reaches exactly the accepting cells connected to an accepting seed.
fn bfs(l: &Lattice, kind: SolutionKind, seeds: &[(usize, usize)]) -> (HashSet<(usize, usize)>, bool) {
    let ok = |x: usize, y: usize| l.cell(x, y).accepts(kind);
    let mut seen: HashSet<(usize, usize)> = seeds.iter().copied().filter(|&(x, y)| ok(x, y)).collect();
    let mut queue: VecDeque<_> = seen.iter().copied().collect();
    while let Some((x, y)) = queue.pop_front() {
        let mut next = vec![];
        if x > 0 {
            next.push((x - 1, y));
        }
        if y > 0 {
            next.push((x, y - 1));
        }
        if x + 1 < l.width() {
            next.push((x + 1, y));
        }
        if y + 1 < l.height() {
            next.push((x, y + 1));
        }
        for (a, b) in next {
            if ok(a, b) && seen.insert((a, b)) {
                queue.push_back((a, b));
            }
        }
    }
    let component_spans = |start: (usize, usize)| {
        let mut comp = HashSet::from([start]);
        let mut q = VecDeque::from([start]);
        while let Some((x, y)) = q.pop_front() {
            for (a, b) in [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)] {
                if seen.contains(&(a, b)) && comp.insert((a, b)) {
                    q.push_back((a, b));
                }
            }
        }
        let v = comp.iter().any(|c| c.1 == 0) && comp.iter().any(|c| c.1 == l.height() - 1);
        let h = comp.iter().any(|c| c.0 == 0) && comp.iter().any(|c| c.0 == l.width() - 1);
        v || h
    };
    let spans = seen.iter().any(|&c| component_spans(c));
    (seen, spans)
}

#[test]
fn small_lattices_match_bfs() {
    for size in [2, 3] {
        for l in every_lattice(size, size) {
            for kind in [SolutionKind::Findable, SolutionKind::Accurate] {
                for seed in [(0, 0), (size - 1, size / 2)] {
                    let r = cascade(&l, kind, &[seed]).unwrap();
                    let (reached, spans) = bfs(&l, kind, &[seed]);
                    let got: HashSet<_> = r.frames.iter().flatten().copied().collect();
                    assert_eq!(got, reached, "{}", l.to_text());
                    assert_eq!(r.spans, spans, "{}", l.to_text());
                }
            }
        }
    }
}

#[test]
fn cascades_grow_with_more_seeds() {
    for l in every_lattice(3, 3).step_by(97) {
        let one = cascade(&l, SolutionKind::Findable, &[(0, 0)]).unwrap();
        let two = cascade(&l, SolutionKind::Findable, &[(0, 0), (2, 2)]).unwrap();
        assert!(two.adopted >= one.adopted);
    }
}

#[test]
fn batch_modes_agree() {
    let jobs: Vec<_> = every_lattice(2, 2)
        .map(|l| (l, SolutionKind::Accurate, vec![(0, 0)]))
        .collect();
    let seq = cascade_many(&jobs, Execution::Sequential);
    let par = cascade_many(&jobs, Execution::Parallel);
    assert_eq!(format!("{seq:?}"), format!("{par:?}"));
}

#[test]
fn unanimous_profiles_never_cycle() {
    let orders = all_rankings(3);
    for i in 0..profile_count(3, 3) as u64 {
        let rankings = nth_profile(i, &orders, 3);
        let unanimous = rankings.iter().all(|r| r == &rankings[0]);
        let rel = pairwise_majority(&PreferenceProfile::lettered(rankings).unwrap()).unwrap();
        if unanimous {
            assert!(!rel.has_cycle());
        }
    }
}

#[test]
fn group_count_modes_agree() {
    let p = CoordinationParams::new(1000, 2, 100.0, 0.9, 0.01).unwrap();
    let a = optimal_group_count_with(&p, 2, Execution::Sequential).unwrap();
    let b = optimal_group_count_with(&p, 2, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
