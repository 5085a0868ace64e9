import torch
from azureml.core import Run

run = Run.get_context()


def train(model, loader, optimizer, epochs):
    for epoch in range(epochs):
        model.train()
        for batch, target in loader:
            optimizer.zero_grad()
            loss = torch.nn.functional.cross_entropy(model(batch), target)
            loss.backward()
            optimizer.step()
        run.log("loss", loss.item())
        torch.save(model.state_dict(), f"outputs/epoch_{epoch}.pt")
