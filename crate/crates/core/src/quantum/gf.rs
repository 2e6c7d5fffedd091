//! Arithmetic in GF(p^m) for the prime-power dimensions 4, 8 and 9.
//! Elements are coefficient vectors in the polynomial basis, low degree
//! first; the element with base-p digits `j` has index `j`.

#[derive(Debug, Clone)]
pub(crate) struct GaloisField {
    p: u32,
    m: usize,
    /// Monic irreducible modulus, low degree first, length m+1.
    modulus: Vec<u32>,
}

impl GaloisField {
    pub(crate) fn for_order(q: usize) -> Option<Self> {
        let (p, m, modulus) = match q {
            4 => (2, 2, vec![1, 1, 1]),
            8 => (2, 3, vec![1, 1, 0, 1]),
            9 => (3, 2, vec![1, 0, 1]),
            _ => return None,
        };
        Some(Self { p, m, modulus })
    }

    pub(crate) fn p(&self) -> u32 {
        self.p
    }

    pub(crate) fn order(&self) -> usize {
        (self.p as usize).pow(self.m as u32)
    }

    pub(crate) fn element(&self, mut index: usize) -> Vec<u32> {
        (0..self.m)
            .map(|_| {
                let digit = (index % self.p as usize) as u32;
                index /= self.p as usize;
                digit
            })
            .collect()
    }

    pub(crate) fn index(&self, a: &[u32]) -> usize {
        a.iter().rev().fold(0, |acc, &c| acc * self.p as usize + c as usize)
    }

    pub(crate) fn add(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub(crate) fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let p = self.p;
        let mut prod = vec![0u32; 2 * self.m - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        for k in (self.m..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            for (t, &mc) in self.modulus.iter().enumerate() {
                let pos = k - self.m + t;
                prod[pos] = (prod[pos] + (p - (c * mc) % p)) % p;
            }
        }
        prod.truncate(self.m);
        prod
    }

    /// `x^i` in the polynomial basis.
    pub(crate) fn monomial(&self, i: usize) -> Vec<u32> {
        let mut v = vec![0; self.m];
        v[i] = 1;
        v
    }

    /// Absolute trace `a + a^p + … + a^{p^{m−1}}`, an element of GF(p).
    pub(crate) fn trace(&self, a: &[u32]) -> u32 {
        let mut power = a.to_vec();
        let mut sum = a.to_vec();
        for _ in 1..self.m {
            let mut next = power.clone();
            for _ in 1..self.p {
                next = self.mul(&next, &power);
            }
            power = next;
            sum = self.add(&sum, &power);
        }
        debug_assert!(sum[1..].iter().all(|&c| c == 0));
        sum[0]
    }
}
