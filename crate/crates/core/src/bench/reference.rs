//! Published accuracies the benchmark output is compared against.

use super::Algorithm;

pub struct ReferenceRow {
    pub id: &'static str,
    pub name: &'static str,
    /// KNN, ENN, SVM, LMNN.
    pub accuracy: [f64; 4],
}

pub const REFERENCE: [ReferenceRow; 11] = [
    ReferenceRow { id: "segmentation", name: "Segmentation", accuracy: [0.7143, 0.7619, 0.881, 0.9967] },
    ReferenceRow { id: "seeds", name: "Seeds", accuracy: [0.9048, 0.9048, 0.9286, 0.9993] },
    ReferenceRow { id: "pima", name: "Pima-Indians-diabetes", accuracy: [0.7532, 0.7078, 0.8052, 0.9963] },
    ReferenceRow { id: "page-blocks", name: "Page-blocks", accuracy: [0.958, 0.9443, 0.8776, 0.9992] },
    ReferenceRow { id: "parkinsons", name: "Parkinsons", accuracy: [0.8974, 0.8974, 0.8718, 0.9987] },
    ReferenceRow { id: "movement_libras", name: "Movement_libras", accuracy: [0.6806, 0.7639, 0.625, 0.9929] },
    ReferenceRow { id: "mammographic", name: "Mammographic masses", accuracy: [0.7552, 0.776, 0.8229, 0.9977] },
    ReferenceRow { id: "knowledge", name: "Knowledge", accuracy: [0.8519, 0.8765, 0.9506, 0.9996] },
    ReferenceRow { id: "ionosphere", name: "Ionosphere", accuracy: [0.8, 0.8143, 0.8286, 0.9971] },
    ReferenceRow { id: "glass", name: "Glass", accuracy: [0.6744, 0.6744, 0.7442, 0.9956] },
    ReferenceRow { id: "cnae9", name: "CNAE9", accuracy: [0.838, 0.875, 0.9583, 0.9983] },
];

pub fn lookup(id: &str) -> Option<&'static ReferenceRow> {
    REFERENCE.iter().find(|r| r.id == id)
}

pub fn reference_accuracy(id: &str, algorithm: Algorithm) -> Option<f64> {
    lookup(id).map(|r| r.accuracy[algorithm.column()])
}
