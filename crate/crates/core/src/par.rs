//! Order-preserving map over independent tasks, parallel when the
//! `parallel` feature is on. Results always come back in input order, so
//! callers see identical output for any worker count.

#[cfg(feature = "parallel")]
pub fn map_with<I, S, T, Init, F>(items: I, init: Init, f: F) -> Vec<T>
where
    I: IntoIterator,
    I::Item: Send,
    T: Send,
    Init: Fn() -> S + Sync + Send,
    F: Fn(&mut S, I::Item) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let items: Vec<I::Item> = items.into_iter().collect();
    items.into_par_iter().map_init(init, |s, x| f(s, x)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_with<I, S, T, Init, F>(items: I, init: Init, f: F) -> Vec<T>
where
    I: IntoIterator,
    Init: Fn() -> S,
    F: Fn(&mut S, I::Item) -> T,
{
    let mut state = init();
    items.into_iter().map(|x| f(&mut state, x)).collect()
}
