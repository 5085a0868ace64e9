import tensorflow as tf
from google.cloud import aiplatform

aiplatform.init(project="demo-project", location="us-central1")


def build_model(features):
    model = tf.keras.Sequential(
        [
            tf.keras.layers.Dense(64, activation="relu", input_shape=(features,)),
            tf.keras.layers.Dense(1),
        ]
    )
    model.compile(optimizer="adam", loss="mse")
    return model


def train(x, y):
    model = build_model(x.shape[1])
    ckpt = tf.train.Checkpoint(model=model)
    manager = tf.train.CheckpointManager(ckpt, "ckpts", max_to_keep=3)
    ckpt.restore(manager.latest_checkpoint)
    model.fit(x, y, epochs=200, validation_split=0.2)
    manager.save()
    return model
