use super::{BetaRef, MIEstimate, MiMethod};
use crate::error::{Error, Result};
use crate::model::{ChannelTable, ObservationModel, SupportPartition, VariableDistribution};

/// `Σ_x Q(x) Σ_y p(y|x) log(p(y|x) / p(y|x_R))` on an enumerated channel.
pub fn mi_from_table(table: &ChannelTable, partition: &SupportPartition) -> Result<f64> {
    let codes = table.partition(partition)?;
    let nu = codes.q_unknown.len();
    let yc = table.y_card();
    let mut marg = vec![0.0; yc];
    let mut total = 0.0;
    for (r, &qr) in codes.q_revealed.iter().enumerate() {
        if qr == 0.0 {
            continue;
        }
        let block = &codes.full[r * nu..(r + 1) * nu];
        marg.iter_mut().for_each(|m| *m = 0.0);
        for (&c, &qu) in block.iter().zip(&codes.q_unknown) {
            for (m, p) in marg.iter_mut().zip(table.row(c)) {
                *m += qu * p;
            }
        }
        let mut inner = 0.0;
        for (&c, &qu) in block.iter().zip(&codes.q_unknown) {
            if qu == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for (p, m) in table.row(c).iter().zip(&marg) {
                if *p > 0.0 {
                    s += p * (p.ln() - m.ln());
                }
            }
            inner += qu * s;
        }
        total += qr * inner;
    }
    Ok(total)
}

/// Exact conditional MI by enumeration. With a prior, returns the prior-averaged value.
pub fn mi_discrete_exact<'a>(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: impl Into<BetaRef<'a>>,
    partition: &SupportPartition,
) -> Result<MIEstimate> {
    let k = partition.k();
    let i = partition.size();
    let value = match beta.into() {
        BetaRef::Vector(b) => mi_from_table(&ChannelTable::build(model, q, b)?, partition)?,
        BetaRef::Prior(prior) => {
            prior.validate(k)?;
            if !model.uses_beta() {
                let b = prior.representative(k);
                mi_from_table(&ChannelTable::build(model, q, &b)?, partition)?
            } else {
                let all = prior.enumerate(k)?.ok_or(Error::ContinuousAlphabet("coefficient prior"))?;
                let mut acc = 0.0;
                for (b, m) in &all {
                    acc += m * mi_from_table(&ChannelTable::build(model, q, b)?, partition)?;
                }
                acc
            }
        }
    };
    Ok(MIEstimate::new(value, MiMethod::Exact, 0.0, i))
}

/// `I(Z_U; Y | Z_R, β)` where `Z` is `X` after independent erasures, by enumeration
/// over the erasure-augmented alphabet.
pub fn mi_missing<'a>(
    model: &ObservationModel,
    q: &VariableDistribution,
    beta: impl Into<BetaRef<'a>>,
    partition: &SupportPartition,
) -> Result<MIEstimate> {
    if !matches!(model, ObservationModel::Missing { .. }) {
        return Err(Error::InvalidParameter("mi_missing needs a missing-data wrapper".into()));
    }
    if model.inner().y_cardinality().is_none() || !q.is_discrete() {
        return Err(Error::ContinuousAlphabet("inner model"));
    }
    mi_discrete_exact(model, q, beta, partition)
}
