use super::{normalize_in_place, Dist, Finding, Node, TreeNet};

/// Upward pass: `lambda[n]` is the likelihood of all evidence in the subtree
/// rooted at `n` as a function of `n`'s category. `up[n]` is the message `n`
/// sends to its parent. Both are rescaled to unit maximum, which leaves every
/// posterior unchanged.
struct Upward {
    evidence: Vec<Vec<f64>>,
    lambda: Vec<Vec<f64>>,
    up: Vec<Vec<f64>>,
}

fn rescale(v: &mut [f64]) {
    let m = v.iter().copied().fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

impl TreeNet {
    fn upward(&self, evidence: &[(usize, &Finding)]) -> Upward {
        let mut ev: Vec<Vec<f64>> = self.nodes.iter().map(|nd| vec![1.0; nd.card]).collect();
        for (ix, f) in evidence {
            f.apply(&mut ev[*ix]);
        }
        self.upward_from(ev)
    }

    fn upward_from(&self, ev: Vec<Vec<f64>>) -> Upward {
        let n = self.nodes.len();
        let mut lambda = ev.clone();
        let mut up: Vec<Vec<f64>> = vec![Vec::new(); n];
        for &ix in self.order.iter().rev() {
            let node: &Node = &self.nodes[ix];
            for &c in &node.children {
                for (x, m) in lambda[ix].iter_mut().zip(&up[c]) {
                    *x *= m;
                }
            }
            rescale(&mut lambda[ix]);
            if let Some(p) = node.parent {
                let pc = self.nodes[p].card;
                let msg: Vec<f64> = (0..pc)
                    .map(|pv| node.row(pv).iter().zip(&lambda[ix]).map(|(a, b)| a * b).sum())
                    .collect();
                up[ix] = msg;
            }
        }
        Upward {
            evidence: ev,
            lambda,
            up,
        }
    }

    /// Posterior beliefs of all nodes by one upward and one downward pass.
    pub(crate) fn beliefs(&self, evidence: &[(usize, &Finding)]) -> Vec<Dist> {
        self.downward(self.upward(evidence), &self.nodes[self.root].table)
    }

    /// Posterior beliefs under per-node likelihood vectors and a replacement
    /// root prior.
    pub(crate) fn beliefs_with(&self, prior: &[f64], ev: &[Vec<f64>]) -> Vec<Dist> {
        self.downward(self.upward_from(ev.to_vec()), prior)
    }

    /// Root likelihood of per-node likelihood vectors, rescaled to unit maximum.
    pub(crate) fn root_likelihood_with(&self, ev: &[Vec<f64>]) -> Vec<f64> {
        self.upward_from(ev.to_vec()).lambda.swap_remove(self.root)
    }

    fn downward(&self, upward: Upward, prior: &[f64]) -> Vec<Dist> {
        let Upward {
            evidence: ev,
            lambda,
            up,
        } = upward;
        let n = self.nodes.len();
        let mut pi: Vec<Vec<f64>> = vec![Vec::new(); n];
        pi[self.root] = prior.to_vec();
        for &ix in &self.order {
            let node = &self.nodes[ix];
            for &c in &node.children {
                // Everything known about `ix` except what came up from `c`.
                let mut to_child: Vec<f64> = pi[ix].iter().zip(&ev[ix]).map(|(a, b)| a * b).collect();
                for &other in &node.children {
                    if other != c {
                        for (x, m) in to_child.iter_mut().zip(&up[other]) {
                            *x *= m;
                        }
                    }
                }
                rescale(&mut to_child);
                let child = &self.nodes[c];
                let mut pc = vec![0.0; child.card];
                for (pv, w) in to_child.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    for (acc, p) in pc.iter_mut().zip(child.row(pv)) {
                        *acc += w * p;
                    }
                }
                pi[c] = pc;
            }
        }
        (0..n)
            .map(|ix| {
                let v: Vec<f64> = pi[ix].iter().zip(&lambda[ix]).map(|(a, b)| a * b).collect();
                Dist::from_weights(v)
            })
            .collect()
    }

    /// Likelihood of `evidence` as a function of the root category, rescaled
    /// to unit maximum.
    pub fn root_likelihood(&self, evidence: &[(usize, &Finding)]) -> Vec<f64> {
        self.upward(evidence).lambda.swap_remove(self.root)
    }

    pub(crate) fn absorb_ix(&self, evidence: &[(usize, &Finding)]) -> TreeNet {
        let Upward { lambda, .. } = self.upward(evidence);
        let mut net = self.clone();
        for (ix, node) in net.nodes.iter_mut().enumerate() {
            let card = node.card;
            for row in node.table.chunks_mut(card) {
                for (p, l) in row.iter_mut().zip(&lambda[ix]) {
                    *p *= l;
                }
                normalize_in_place(row);
            }
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Evidence, NodeSpec, TreeNet};
    use approx::assert_abs_diff_eq;

    fn sensor_net(cpt: Vec<Vec<f64>>) -> TreeNet {
        TreeNet::new(vec![
            NodeSpec::root("L", vec![0.5, 0.5]),
            NodeSpec::child("Z", "L", cpt),
        ])
        .unwrap()
    }

    #[test]
    fn identity_sensor_reveals_parent() {
        let net = sensor_net(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = net.posterior("L", &[Evidence::hard("Z", 0)]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_prior_gives_normalized_likelihood() {
        let net = sensor_net(vec![vec![0.9, 0.1], vec![0.1, 0.9]]);
        let p = net.posterior("L", &[Evidence::hard("Z", 0)]).unwrap();
        assert_abs_diff_eq!(p[0], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn empty_evidence_gives_marginals() {
        let net = TreeNet::new(vec![
            NodeSpec::root("A", vec![0.3, 0.7]),
            NodeSpec::child("B", "A", vec![vec![0.2, 0.8], vec![0.6, 0.4]]),
        ])
        .unwrap();
        let b = net.marginal("B").unwrap();
        assert_abs_diff_eq!(b[0], 0.3 * 0.2 + 0.7 * 0.6, epsilon = 1e-12);
    }

    #[test]
    fn absorb_then_query_matches_full_history() {
        let net = sensor_net(vec![vec![0.9, 0.1], vec![0.1, 0.9]]);
        let e1 = Evidence::soft("Z", vec![0.7, 0.2]);
        let e2 = Evidence::hard("Z", 1);
        let absorbed = net.absorb(&[e1.clone()]).unwrap();
        let seq = absorbed.posterior("L", &[e2.clone()]).unwrap();
        let full = net.posterior("L", &[e1, e2]).unwrap();
        assert!(seq.max_abs_diff(&full) < 1e-9);
    }

    #[test]
    fn absorbing_nothing_or_uniform_is_identity() {
        let net = sensor_net(vec![vec![0.9, 0.1], vec![0.3, 0.7]]);
        let same = net.absorb(&[]).unwrap();
        let flat = net.absorb(&[Evidence::soft("Z", vec![0.4, 0.4])]).unwrap();
        for other in [same, flat] {
            for (a, b) in net.nodes.iter().zip(&other.nodes) {
                for (x, y) in a.table.iter().zip(&b.table) {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-12);
                }
            }
        }
    }
}
