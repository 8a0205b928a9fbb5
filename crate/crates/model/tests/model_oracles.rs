//! Oracle tests for the network: a hand-rolled dense message-passing
//! implementation, direct loss-formula evaluation, batching equivariance,
//! the receptive-field bound and a full-model finite-difference check.
//!
//! The oracles stick to explicit index loops on purpose.
#![allow(clippy::needless_range_loop)]

use logmend_encode::{
    apply_mask, batch_graphs, build_graph, strategy_by_name, EncoderSet, GraphBatch, HeteroGraph,
    Targets,
};
use logmend_log::{
    AttrKind, AttrScope, Attribute, AttributeSchema, Cell, Event, EventLog, Trace,
};
use logmend_model::{
    compute_loss, forward, load_params, loss_on_batch, sage_layer, save_params, ModelConfig,
    ModelParams, PredictionBlock, Predictions, RowRef,
};
use logmend_tensor::{aggregate_kernel, Tape, Tensor};

fn schema() -> AttributeSchema {
    AttributeSchema::new(
        vec![
            Attribute { name: "activity".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
            Attribute { name: "timestamp".into(), kind: AttrKind::Timestamp, scope: AttrScope::Event },
            Attribute { name: "resource".into(), kind: AttrKind::Categorical, scope: AttrScope::Event },
        ],
        "case_id",
        "activity",
        "timestamp",
    )
    .unwrap()
}

fn make_log(lens: &[usize]) -> EventLog {
    let traces = lens
        .iter()
        .enumerate()
        .map(|(ti, &len)| Trace {
            case_id: format!("c{ti}"),
            events: (0..len)
                .map(|i| Event {
                    cells: vec![
                        Cell::Present(["A", "B", "C", "D", "E"][(i + ti) % 5].to_string()),
                        Cell::Present(format!("2024-01-01 00:00:{:02}", (i * 3) % 60)),
                        Cell::Present(["r1", "r2"][i % 2].to_string()),
                    ],
                })
                .collect(),
        })
        .collect();
    EventLog { schema: schema(), traces }
}

fn graphs_for(log: &EventLog, enc: &EncoderSet, seed: u64) -> Vec<HeteroGraph> {
    let strategy = strategy_by_name("random", 0.5).unwrap();
    log.traces
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mask = apply_mask(strategy.as_ref(), t.len(), seed + i as u64);
            build_graph(t, &mask, enc).unwrap()
        })
        .collect()
}

fn zero_all_params(params: &mut ModelParams) {
    for p in params.set.iter_mut() {
        p.value.fill(0.0);
    }
}

fn set_identity(t: &mut Tensor) {
    t.fill(0.0);
    for i in 0..t.rows().min(t.cols()) {
        t.set(i, i, 1.0);
    }
}

#[test]
fn sage_layer_identity_weights_example() {
    // Single active relation with identity weights and zero bias:
    // node with state [1, 2] and neighbor sum [4, 5] -> [5, 7].
    let log = make_log(&[2]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 2, n_layers: 1, aggregator: "mean".into(), seed: 0 };
    let mut params = ModelParams::init(&enc, &cfg).unwrap();
    zero_all_params(&mut params);

    // Relation 0 is the activity chain (activity_i -> activity_{i+1}).
    let weights = params.layers[0][0];
    set_identity(&mut params.set.get_mut(weights.w_self).value);
    set_identity(&mut params.set.get_mut(weights.w_neigh).value);

    let graph = build_graph(&log.traces[0], &[false, false], &enc).unwrap();
    let batch = batch_graphs(&[&graph]).unwrap();

    let mut tape = Tape::new();
    let h_act = tape.constant(Tensor::from_rows(&[vec![4.0, 5.0], vec![1.0, 2.0]]).unwrap());
    let h_ts = tape.constant(Tensor::zeros(2, 2));
    let h_res = tape.constant(Tensor::zeros(2, 2));
    let kernel = aggregate_kernel("mean").unwrap();
    let out = sage_layer(
        &mut tape,
        &[h_act, h_ts, h_res],
        &batch,
        &params.layers[0],
        &params,
        &kernel,
        false,
    )
    .unwrap();

    // Node 1's chain-forward neighborhood is {node 0}.
    assert_eq!(tape.value(out[0]).row(1), &[5.0, 7.0]);
    // Node 0 has no incoming chain-forward edge: self term only.
    assert_eq!(tape.value(out[0]).row(0), &[4.0, 5.0]);
}

/// Dense re-implementation of one message-passing layer using plain nested
/// loops and explicit adjacency matrices.
fn dense_sage_oracle(
    hidden: &[Vec<Vec<f64>>],
    batch: &GraphBatch,
    params: &ModelParams,
    layer: usize,
    rectify: bool,
) -> Vec<Vec<Vec<f64>>> {
    let n_rows = batch.total_rows();
    let h = params.set.get(params.input[0].bias).value.cols();
    let mut out = vec![vec![vec![0.0; h]; n_rows]; hidden.len()];

    for (r, relation) in params.relations.relations.iter().enumerate() {
        let weights = &params.layers[layer][r];
        let w_self = &params.set.get(weights.w_self).value;
        let w_neigh = &params.set.get(weights.w_neigh).value;
        let bias = &params.set.get(weights.bias).value;

        // Dense adjacency of this relation.
        let mut adj = vec![vec![false; n_rows]; n_rows];
        for k in 0..batch.edges[r].len() {
            adj[batch.edges[r].dst[k]][batch.edges[r].src[k]] = true;
        }

        for dst in 0..n_rows {
            // Self term.
            for j in 0..h {
                let mut acc = 0.0;
                for i in 0..h {
                    acc += hidden[relation.dst_attr][dst][i] * w_self.get(i, j);
                }
                out[relation.dst_attr][dst][j] += acc + bias.get(0, j);
            }
            // Mean over incoming sources.
            let sources: Vec<usize> = (0..n_rows).filter(|&s| adj[dst][s]).collect();
            if sources.is_empty() {
                continue;
            }
            let mut mean = vec![0.0; h];
            for &s in &sources {
                for i in 0..h {
                    mean[i] += hidden[relation.src_attr][s][i];
                }
            }
            for v in &mut mean {
                *v /= sources.len() as f64;
            }
            for j in 0..h {
                let mut acc = 0.0;
                for i in 0..h {
                    acc += mean[i] * w_neigh.get(i, j);
                }
                out[relation.dst_attr][dst][j] += acc;
            }
        }
    }

    if rectify {
        for table in &mut out {
            for row in table {
                for v in row {
                    *v = v.max(0.0);
                }
            }
        }
    }
    out
}

#[test]
fn sage_layer_matches_the_dense_oracle() {
    let log = make_log(&[3]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 5, n_layers: 1, aggregator: "mean".into(), seed: 21 };
    let params = ModelParams::init(&enc, &cfg).unwrap();
    let graph = build_graph(&log.traces[0], &[false, true, false], &enc).unwrap();
    let batch = batch_graphs(&[&graph]).unwrap();

    // Projected inputs, taken off the tape so both routes start identically.
    let mut tape = Tape::new();
    let mut hidden = Vec::new();
    for attr in 0..batch.n_attributes() {
        let f = tape.constant(batch.features[attr].clone());
        let w = tape.param(&params.set, params.input[attr].weight);
        let b = tape.param(&params.set, params.input[attr].bias);
        let p = tape.matmul(f, w).unwrap();
        hidden.push(tape.add(p, b).unwrap());
    }
    let dense_in: Vec<Vec<Vec<f64>>> = hidden
        .iter()
        .map(|&v| {
            let t = tape.value(v);
            (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
        })
        .collect();

    let kernel = aggregate_kernel("mean").unwrap();
    let out = sage_layer(&mut tape, &hidden, &batch, &params.layers[0], &params, &kernel, true)
        .unwrap();
    let expected = dense_sage_oracle(&dense_in, &batch, &params, 0, true);

    for attr in 0..3 {
        let got = tape.value(out[attr]);
        for row in 0..got.rows() {
            for col in 0..got.cols() {
                let diff = (got.get(row, col) - expected[attr][row][col]).abs();
                assert!(diff < 1e-10, "attr {attr} row {row} col {col}: diff {diff}");
            }
        }
    }
}

#[test]
fn forward_on_a_batch_equals_concatenated_single_graphs() {
    let log = make_log(&[4, 3, 5]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 6, n_layers: 2, aggregator: "mean".into(), seed: 3 };
    let params = ModelParams::init(&enc, &cfg).unwrap();
    let graphs = graphs_for(&log, &enc, 11);
    let refs: Vec<&HeteroGraph> = graphs.iter().collect();

    let batch = batch_graphs(&refs).unwrap();
    let mut tape = Tape::new();
    let batched = forward(&mut tape, &batch, &params, &cfg).unwrap();

    for attr in 0..3 {
        let mut single_rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for (gi, graph) in graphs.iter().enumerate() {
            let one = batch_graphs(&[graph]).unwrap();
            let mut t = Tape::new();
            let preds = forward(&mut t, &one, &params, &cfg).unwrap();
            if let Some(block) = &preds.blocks[attr] {
                let out = t.value(block.output);
                for (i, row) in block.rows.iter().enumerate() {
                    single_rows.push((gi, row.event, out.row(i).to_vec()));
                }
            }
        }
        match &batched.blocks[attr] {
            None => assert!(single_rows.is_empty()),
            Some(block) => {
                let out = tape.value(block.output);
                assert_eq!(block.rows.len(), single_rows.len());
                for (i, row) in block.rows.iter().enumerate() {
                    let (gi, event, expected) = &single_rows[i];
                    assert_eq!((row.graph, row.event), (*gi, *event));
                    for (a, b) in out.row(i).iter().zip(expected) {
                        assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn empty_masks_give_zero_rows_and_zero_loss() {
    let log = make_log(&[3, 2]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 4, n_layers: 1, aggregator: "sum".into(), seed: 0 };
    let params = ModelParams::init(&enc, &cfg).unwrap();
    let graphs: Vec<HeteroGraph> = log
        .traces
        .iter()
        .map(|t| build_graph(t, &vec![false; t.len()], &enc).unwrap())
        .collect();
    let refs: Vec<&HeteroGraph> = graphs.iter().collect();
    let batch = batch_graphs(&refs).unwrap();

    let mut tape = Tape::new();
    let preds = forward(&mut tape, &batch, &params, &cfg).unwrap();
    assert_eq!(preds.total_rows(), 0);
    let loss = compute_loss(&mut tape, &preds, &batch).unwrap();
    assert_eq!(tape.value(loss).item().unwrap(), 0.0);
}

#[test]
fn prediction_rows_are_masked_events_times_attributes() {
    let enc_log = make_log(&[6]);
    let enc = EncoderSet::fit(&enc_log).unwrap();
    let cfg = ModelConfig { hidden_size: 4, n_layers: 2, aggregator: "mean".into(), seed: 0 };
    let params = ModelParams::init(&enc, &cfg).unwrap();
    let strategy = strategy_by_name("window", 0.5).unwrap();

    // Window pattern masks {1, 2, 4} on five events and {1, 2, 4, 5} on six.
    for (len, expected_rows) in [(5usize, 9usize), (6, 12)] {
        let log = make_log(&[len]);
        let mask = apply_mask(strategy.as_ref(), len, 0);
        let graph = build_graph(&log.traces[0], &mask, &enc).unwrap();
        let batch = batch_graphs(&[&graph]).unwrap();
        let mut tape = Tape::new();
        let preds = forward(&mut tape, &batch, &params, &cfg).unwrap();
        assert_eq!(preds.total_rows(), expected_rows, "length {len}");
    }
}

#[test]
fn loss_of_uniform_logits_plus_half_error_is_ln2_plus_half() {
    // One categorical attribute (2 classes, uniform logits, 1 row) and one
    // numeric attribute (absolute error 0.5, 1 row).
    let mut tape = Tape::new();
    let logits = tape.constant(Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap());
    let value = tape.constant(Tensor::from_rows(&[vec![1.5]]).unwrap());
    let preds = Predictions {
        blocks: vec![
            Some(PredictionBlock {
                output: logits,
                rows: vec![RowRef { graph: 0, event: 0 }],
                categorical: true,
            }),
            Some(PredictionBlock {
                output: value,
                rows: vec![RowRef { graph: 0, event: 0 }],
                categorical: false,
            }),
        ],
    };
    // Minimal batch carrying only the targets the loss needs.
    let log = make_log(&[1]);
    let enc = EncoderSet::fit(&log).unwrap();
    let graph = build_graph(&log.traces[0], &[true], &enc).unwrap();
    let mut batch = batch_graphs(&[&graph]).unwrap();
    batch.targets = vec![Targets::Classes(vec![0]), Targets::Values(vec![1.0])];

    let preds = Predictions { blocks: preds.blocks.into_iter().take(2).collect() };
    let loss = compute_loss(&mut tape, &preds, &batch).unwrap();
    let expected = 2.0_f64.ln() + 0.5;
    assert!((tape.value(loss).item().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn saturated_predictions_drive_the_loss_to_zero() {
    // Perfectly confident logits plus exact numeric outputs.
    let mut tape = Tape::new();
    let logits = tape.constant(Tensor::from_rows(&[vec![60.0, 0.0], vec![0.0, 60.0]]).unwrap());
    let value = tape.constant(Tensor::from_rows(&[vec![0.75]]).unwrap());
    let preds = Predictions {
        blocks: vec![
            Some(PredictionBlock {
                output: logits,
                rows: vec![RowRef { graph: 0, event: 0 }, RowRef { graph: 0, event: 1 }],
                categorical: true,
            }),
            Some(PredictionBlock {
                output: value,
                rows: vec![RowRef { graph: 0, event: 0 }],
                categorical: false,
            }),
        ],
    };
    let log = make_log(&[2]);
    let enc = EncoderSet::fit(&log).unwrap();
    let graph = build_graph(&log.traces[0], &[true, true], &enc).unwrap();
    let mut batch = batch_graphs(&[&graph]).unwrap();
    batch.targets = vec![Targets::Classes(vec![0, 1]), Targets::Values(vec![0.75])];

    let preds = Predictions { blocks: preds.blocks.into_iter().take(2).collect() };
    let loss = compute_loss(&mut tape, &preds, &batch).unwrap();
    let value = tape.value(loss).item().unwrap();
    assert!(value >= 0.0);
    assert!(value < 1e-6, "saturated loss {value}");
}

#[test]
fn loss_matches_direct_formula_on_random_batches() {
    for trial in 0..20 {
        let log = make_log(&[3 + trial % 3, 2 + trial % 4]);
        let enc = EncoderSet::fit(&log).unwrap();
        let cfg = ModelConfig {
            hidden_size: 4,
            n_layers: 2,
            aggregator: ["sum", "mean", "max"][trial % 3].into(),
            seed: trial as u64,
        };
        let params = ModelParams::init(&enc, &cfg).unwrap();
        let graphs = graphs_for(&log, &enc, 100 + trial as u64);
        let refs: Vec<&HeteroGraph> = graphs.iter().collect();
        let batch = batch_graphs(&refs).unwrap();

        let mut tape = Tape::new();
        let preds = forward(&mut tape, &batch, &params, &cfg).unwrap();
        let loss = compute_loss(&mut tape, &preds, &batch).unwrap();
        let got = tape.value(loss).item().unwrap();

        // Independent evaluation from the raw head outputs.
        let mut expected = 0.0;
        for (attr, block) in preds.blocks.iter().enumerate() {
            let Some(block) = block else { continue };
            let out = tape.value(block.output);
            match &batch.targets[attr] {
                Targets::Classes(classes) => {
                    let mut term = 0.0;
                    for (r, &class) in classes.iter().enumerate() {
                        let row = out.row(r);
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let denom: f64 = row.iter().map(|&v| (v - max).exp()).sum();
                        term -= (row[class] - max) - denom.ln();
                    }
                    expected += term / classes.len() as f64;
                }
                Targets::Values(values) => {
                    let term: f64 = values
                        .iter()
                        .enumerate()
                        .map(|(r, &v)| (out.get(r, 0) - v).abs())
                        .sum();
                    expected += term / values.len() as f64;
                }
            }
        }
        assert!((got - expected).abs() < 1e-10, "trial {trial}: {got} vs {expected}");
    }
}

/// Hop distances to `target` over influence edges (u influences v when the
/// relation edge u -> v exists).
fn influence_distances(batch: &GraphBatch, target: (usize, usize)) -> Vec<Vec<usize>> {
    let n_rows = batch.total_rows();
    let mut dist = vec![vec![usize::MAX; n_rows]; batch.n_attributes()];
    dist[target.0][target.1] = 0;
    let mut queue = std::collections::VecDeque::from([target]);
    while let Some((attr, row)) = queue.pop_front() {
        let d = dist[attr][row];
        for (r, relation) in batch.relations.relations.iter().enumerate() {
            if relation.dst_attr != attr {
                continue;
            }
            for k in 0..batch.edges[r].len() {
                if batch.edges[r].dst[k] == row {
                    let src = (relation.src_attr, batch.edges[r].src[k]);
                    if dist[src.0][src.1] == usize::MAX {
                        dist[src.0][src.1] = d + 1;
                        queue.push_back(src);
                    }
                }
            }
        }
    }
    dist
}

#[test]
fn zeroing_features_beyond_k_hops_leaves_logits_unchanged() {
    let log = make_log(&[9]);
    let enc = EncoderSet::fit(&log).unwrap();
    for k in [1usize, 2, 3] {
        let cfg = ModelConfig { hidden_size: 4, n_layers: k, aggregator: "mean".into(), seed: 7 };
        let params = ModelParams::init(&enc, &cfg).unwrap();
        let mut mask = vec![false; 9];
        mask[4] = true;
        let graph = build_graph(&log.traces[0], &mask, &enc).unwrap();
        let batch = batch_graphs(&[&graph]).unwrap();

        let mut tape = Tape::new();
        let preds = forward(&mut tape, &batch, &params, &cfg).unwrap();
        let block = preds.blocks[0].as_ref().unwrap();
        let baseline = tape.value(block.output).row(0).to_vec();

        let dist = influence_distances(&batch, (0, 4));
        let mut far_batch = batch.clone();
        let mut zeroed = 0;
        for attr in 0..far_batch.n_attributes() {
            for row in 0..far_batch.total_rows() {
                if dist[attr][row] > k {
                    far_batch.features[attr].row_mut(row).fill(0.0);
                    zeroed += 1;
                }
            }
        }
        assert!(zeroed > 0, "test must zero something for K = {k}");

        let mut tape2 = Tape::new();
        let preds2 = forward(&mut tape2, &far_batch, &params, &cfg).unwrap();
        let block2 = preds2.blocks[0].as_ref().unwrap();
        let changed = tape2.value(block2.output).row(0).to_vec();
        for (a, b) in baseline.iter().zip(&changed) {
            assert!((a - b).abs() < 1e-9, "K = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn full_model_gradients_match_finite_differences() {
    let log = make_log(&[3, 2]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 3, n_layers: 2, aggregator: "mean".into(), seed: 17 };
    let mut params = ModelParams::init(&enc, &cfg).unwrap();
    let graphs = graphs_for(&log, &enc, 40);
    let refs: Vec<&HeteroGraph> = graphs.iter().collect();
    let batch = batch_graphs(&refs).unwrap();

    params.set.zero_grads();
    let mut tape = Tape::new();
    let loss = loss_on_batch(&mut tape, &batch, &params, &cfg).unwrap();
    tape.backward(loss, &mut params.set).unwrap();
    let analytic: Vec<Vec<f64>> = params.set.iter().map(|p| p.grad.data().to_vec()).collect();

    let eval = |params: &ModelParams| -> f64 {
        let mut tape = Tape::new();
        let loss = loss_on_batch(&mut tape, &batch, params, &cfg).unwrap();
        tape.value(loss).item().unwrap()
    };

    let h = 1e-6;
    let mut checked = 0;
    for pi in 0..params.set.len() {
        let n_coords = analytic[pi].len();
        for ci in 0..n_coords {
            let orig = params.set.iter().nth(pi).unwrap().value.data()[ci];
            params.set.iter_mut().nth(pi).unwrap().value.data_mut()[ci] = orig + h;
            let plus = eval(&params);
            params.set.iter_mut().nth(pi).unwrap().value.data_mut()[ci] = orig - h;
            let minus = eval(&params);
            params.set.iter_mut().nth(pi).unwrap().value.data_mut()[ci] = orig;

            let fd = (plus - minus) / (2.0 * h);
            let an = analytic[pi][ci];
            let denom = an.abs().max(fd.abs());
            if denom < 1e-7 {
                continue;
            }
            assert!(
                (an - fd).abs() / denom < 1e-4,
                "param {pi} coord {ci}: analytic {an} vs fd {fd}"
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} coordinates checked");
}

#[test]
fn params_file_round_trips() {
    let log = make_log(&[3]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 5, n_layers: 2, aggregator: "max".into(), seed: 99 };
    let params = ModelParams::init(&enc, &cfg).unwrap();

    let mut bytes = Vec::new();
    save_params(&params, &cfg, &enc, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"SGRF");

    let (loaded, loaded_cfg) = load_params(bytes.as_slice(), &enc).unwrap();
    assert_eq!(loaded_cfg, cfg);
    for (a, b) in params.set.iter().zip(loaded.set.iter()) {
        assert_eq!(a.value, b.value, "{}", a.name);
    }

    // A different vocabulary must be rejected.
    let other = make_log(&[5]);
    let other_enc = EncoderSet::fit(&other).unwrap();
    assert!(load_params(bytes.as_slice(), &other_enc).is_err());
}

#[test]
fn rejects_batches_from_a_different_schema() {
    let log = make_log(&[3]);
    let enc = EncoderSet::fit(&log).unwrap();
    let cfg = ModelConfig { hidden_size: 4, n_layers: 1, aggregator: "mean".into(), seed: 0 };
    let params = ModelParams::init(&enc, &cfg).unwrap();

    let wider = make_log(&[5]);
    let wider_enc = EncoderSet::fit(&wider).unwrap();
    let graph = build_graph(&wider.traces[0], &[false; 5], &wider_enc).unwrap();
    let batch = batch_graphs(&[&graph]).unwrap();
    let mut tape = Tape::new();
    assert!(forward(&mut tape, &batch, &params, &cfg).is_err());
}
