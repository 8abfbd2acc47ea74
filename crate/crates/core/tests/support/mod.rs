//! Small ONNX feature networks built in memory, so the file-backed backend
//! can be exercised without shipping model weights.

#![allow(dead_code)]

use prost::Message;
use tract_onnx::pb::attribute_proto::AttributeType;
use tract_onnx::pb::tensor_proto::DataType;
use tract_onnx::pb::tensor_shape_proto::{dimension, Dimension};
use tract_onnx::pb::{
    type_proto, AttributeProto, GraphProto, ModelProto, NodeProto, OperatorSetIdProto, TensorProto, TensorShapeProto,
    TypeProto, ValueInfoProto,
};

pub const VGG_CHANNELS: [usize; 5] = [64, 128, 256, 512, 512];

fn float_value(name: &str, dims: Option<Vec<dimension::Value>>) -> ValueInfoProto {
    let shape = dims.map(|d| TensorShapeProto {
        dim: d.into_iter().map(|v| Dimension { value: Some(v), ..Default::default() }).collect(),
    });
    ValueInfoProto {
        name: name.into(),
        r#type: Some(TypeProto {
            value: Some(type_proto::Value::TensorType(type_proto::Tensor { elem_type: DataType::Float as i32, shape })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn ints(name: &str, v: &[i64]) -> AttributeProto {
    AttributeProto { name: name.into(), r#type: AttributeType::Ints as i32, ints: v.to_vec(), ..Default::default() }
}

fn node(op: &str, name: &str, inputs: &[&str], output: &str, attribute: Vec<AttributeProto>) -> NodeProto {
    NodeProto {
        op_type: op.into(),
        name: name.into(),
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![output.into()],
        attribute,
        ..Default::default()
    }
}

/// A chain of 1×1 convolutions with ReLU, halving resolution between stages,
/// tapping one output per stage. Weights are a fixed hash of their index.
pub fn conv_chain(channels: &[usize]) -> Vec<u8> {
    let dyn_dim = |s: &str| dimension::Value::DimParam(s.into());
    let mut g = GraphProto {
        name: "chain".into(),
        input: vec![float_value(
            "x",
            Some(vec![dimension::Value::DimValue(1), dimension::Value::DimValue(3), dyn_dim("h"), dyn_dim("w")]),
        )],
        ..Default::default()
    };
    let (mut prev, mut c_in) = ("x".to_string(), 3usize);
    for (i, &c) in channels.iter().enumerate() {
        let input = if i == 0 {
            prev.clone()
        } else {
            let pooled = format!("pool{i}");
            g.node.push(node(
                "MaxPool",
                &pooled,
                &[&prev],
                &pooled,
                vec![ints("kernel_shape", &[2, 2]), ints("strides", &[2, 2])],
            ));
            pooled
        };
        let w = format!("w{i}");
        let float_data = (0..c * c_in)
            .map(|k| {
                let h = (k as u32).wrapping_mul(2_654_435_761).wrapping_add(i as u32 * 97) >> 16;
                (h % 2001) as f32 / 1000.0 - 1.0
            })
            .collect();
        g.initializer.push(TensorProto {
            name: w.clone(),
            dims: vec![c as i64, c_in as i64, 1, 1],
            data_type: DataType::Float as i32,
            float_data,
            ..Default::default()
        });
        let conv = format!("conv{i}");
        g.node.push(node("Conv", &conv, &[&input, &w], &conv, vec![ints("kernel_shape", &[1, 1])]));
        let out = format!("relu{i}");
        g.node.push(node("Relu", &out, &[&conv], &out, vec![]));
        g.output.push(float_value(&out, None));
        prev = out;
        c_in = c;
    }
    ModelProto {
        ir_version: 7,
        opset_import: vec![OperatorSetIdProto { domain: String::new(), version: 13 }],
        graph: Some(g),
        ..Default::default()
    }
    .encode_to_vec()
}
