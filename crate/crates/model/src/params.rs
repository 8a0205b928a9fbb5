//! Parameter layout and initialization.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use logmend_encode::{EncoderSet, RelationTable};
use logmend_tensor::{ParamId, ParamSet, Tensor};

use crate::config::ModelConfig;
use crate::error::ModelError;

/// Weights of one per-relation convolution: self term, neighbor term, bias.
#[derive(Debug, Clone, Copy)]
pub struct RelationWeights {
    pub w_self: ParamId,
    pub w_neigh: ParamId,
    pub bias: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub weight: ParamId,
    pub bias: ParamId,
}

/// All trainable parameters of one model plus the layout tying ids to their
/// role. Construction order is fixed, so ids are stable for a given
/// (encoders, config) pair.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub set: ParamSet,
    /// Per attribute: projection of raw features into the hidden space.
    pub input: Vec<Projection>,
    /// [layer][relation] convolution weights.
    pub layers: Vec<Vec<RelationWeights>>,
    /// Per attribute: linear head mapping hidden state to logits or a scalar.
    pub heads: Vec<Projection>,
    pub relations: RelationTable,
}

impl ModelParams {
    /// Initializes weights uniformly in +-sqrt(6 / (fan_in + fan_out)) and
    /// biases at zero, deterministically under `cfg.seed`.
    pub fn init(enc: &EncoderSet, cfg: &ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = StdRng::seed_from_u64(cfg.seed);
        let mut set = ParamSet::new();
        let hidden = cfg.hidden_size;
        let relations = RelationTable::for_schema(&enc.schema);

        let mut glorot = |set: &mut ParamSet, name: String, rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            set.add(name, Tensor::new(rows, cols, data).expect("sized data"))
        };

        let mut input = Vec::with_capacity(enc.n_attributes());
        for attr in 0..enc.n_attributes() {
            let name = &enc.schema.attributes[attr].name;
            let weight = glorot(&mut set, format!("input/{name}/w"), enc.width(attr), hidden);
            let bias = set.add(format!("input/{name}/b"), Tensor::zeros(1, hidden));
            input.push(Projection { weight, bias });
        }

        let mut layers = Vec::with_capacity(cfg.n_layers);
        for layer in 0..cfg.n_layers {
            let mut per_relation = Vec::with_capacity(relations.len());
            for relation in &relations.relations {
                let label = relation.label(&enc.schema);
                let w_self = glorot(&mut set, format!("layer{layer}/{label}/w_self"), hidden, hidden);
                let w_neigh = glorot(&mut set, format!("layer{layer}/{label}/w_neigh"), hidden, hidden);
                let bias = set.add(format!("layer{layer}/{label}/b"), Tensor::zeros(1, hidden));
                per_relation.push(RelationWeights { w_self, w_neigh, bias });
            }
            layers.push(per_relation);
        }

        let mut heads = Vec::with_capacity(enc.n_attributes());
        for attr in 0..enc.n_attributes() {
            let name = &enc.schema.attributes[attr].name;
            let out = head_width(enc, attr);
            let weight = glorot(&mut set, format!("head/{name}/w"), hidden, out);
            let bias = set.add(format!("head/{name}/b"), Tensor::zeros(1, out));
            heads.push(Projection { weight, bias });
        }

        Ok(Self { set, input, layers, heads, relations })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden_size(&self) -> usize {
        self.set.get(self.input[0].bias).value.cols()
    }
}

/// Output width of an attribute head: the full vocabulary (including the
/// missing class) for categorical attributes, 1 for numeric ones.
pub fn head_width(enc: &EncoderSet, attr: usize) -> usize {
    if enc.is_categorical(attr) {
        enc.width(attr)
    } else {
        1
    }
}
