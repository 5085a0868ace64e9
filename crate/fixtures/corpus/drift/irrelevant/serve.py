import json
import pickle


with open("model.pkl", "rb") as handle:
    model = pickle.load(handle)


def predict(payload):
    return json.dumps({"prediction": model.predict([payload["features"]]).tolist()})
